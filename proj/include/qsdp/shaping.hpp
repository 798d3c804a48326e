#pragma once

// Covariance shaping: from a scaled SDP block [V Z; Z' W] (PSD, unit
// diagonal) build a unit-diagonal PSD matrix Q with arcsin(Q12) = gamma Z,
// so that sign-Gaussian samples from Q have E[u v'] = (2 gamma / pi) Z.

#include <cmath>

#include "qsdp/sdp.hpp"
#include "qsdp/types.hpp"

namespace qsdp {

/// gamma = ln(1 + sqrt 2), the constant with sinh(gamma) = 1.
inline const double kGamma = std::log(1.0 + std::sqrt(2.0));

struct ShapedCovariance {
  Matrix q;  ///< 2d x 2d
  double gamma = kGamma;
  double rho = 0.0;  ///< the SDP's rho*, carried for the second layer

  Eigen::Index d() const { return q.rows() / 2; }
  Matrix q11() const { return q.topLeftCorner(d(), d()); }
  Matrix q12() const { return q.topRightCorner(d(), d()); }
  Matrix q21() const { return q.bottomLeftCorner(d(), d()); }
  Matrix q22() const { return q.bottomRightCorner(d(), d()); }
};

struct ScaledSolution {
  Matrix v, z, w;  ///< d x d blocks of Q* / rho*
  double rho = 0.0;
};

/// Divides the k-th bilinear block by its rho. rho <= 1e-12 yields the
/// zero-network signal: Z_s = 0, V_s = W_s = I, rho = 0.
ScaledSolution scale_solution(const SdpSolution& solution, std::size_t k = 0);

/// Closed-form Krivine completion: blocks sinh(gamma V), sin(gamma Z),
/// sinh(gamma W), followed by psd_repair. Rejects inputs that are not PSD
/// with unit diagonal to within `tol`.
ShapedCovariance krivine_shape(const Matrix& v, const Matrix& z, const Matrix& w,
                               double rho = 0.0, double tol = 1e-6);
ShapedCovariance krivine_shape(const ScaledSolution& scaled, double tol = 1e-6);

struct NumericShapeConfig {
  long max_iterations = 10000;
  double entry_tol = 1e-11;       ///< stop when max |Q12 - sin(gamma Z)| is below
  double failure_objective = 1e-8;
};

/// Nearest unit-diagonal PSD Q with Q12 = sin(gamma Z), by Dykstra's
/// alternating projections between the PSD cone and the affine constraint set.
ShapedCovariance numeric_shape(const Matrix& z, const NumericShapeConfig& config = {},
                               double rho = 0.0);

/// ||Q12 - sin(gamma Z)||_F^2
double shaping_objective(const Matrix& q, const Matrix& z);

/// Clip negative eigenvalues, then rescale to unit diagonal. Returns `a`
/// untouched when it is already PSD within `tol` with unit diagonal within tol.
Matrix psd_repair(const Matrix& a, double tol = 1e-12);

}  // namespace qsdp
