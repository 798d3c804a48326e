#include "qsdp/shaping.hpp"

#include <string>

#include "qsdp/errors.hpp"
#include "qsdp/linalg.hpp"

namespace qsdp {

namespace {

Matrix unit_diagonal_congruence(const Matrix& a) {
  const Eigen::Index k = a.rows();
  Vector scale(k);
  for (Eigen::Index j = 0; j < k; ++j)
    scale(j) = a(j, j) > 1e-300 ? 1.0 / std::sqrt(a(j, j)) : 0.0;
  Matrix out = symmetrized(scale.asDiagonal() * a * scale.asDiagonal());
  // a zero row stays zero; its unit diagonal keeps the matrix PSD
  out.diagonal().setOnes();
  return out;
}

Matrix sin_target(const Matrix& z) {
  return (kGamma * z).array().sin().matrix();
}

}  // namespace

ScaledSolution scale_solution(const SdpSolution& sol, std::size_t k) {
  if (sol.variant == SdpVariant::quadratic)
    throw InvalidInput("covariance shaping needs a bilinear or vector solution");
  if (!sol.converged) throw InvalidInput("cannot shape an unconverged SDP solution");
  const double rho = sol.rho.at(k);
  const Eigen::Index d = sol.d;
  ScaledSolution out;
  if (rho <= 1e-12) {
    out.v = Matrix::Identity(d, d);
    out.w = Matrix::Identity(d, d);
    out.z = Matrix::Zero(d, d);
    out.rho = 0.0;
    return out;
  }
  out.v = sol.v(k) / rho;
  out.z = sol.z(k) / rho;
  out.w = sol.w(k) / rho;
  out.rho = rho;
  return out;
}

Matrix psd_repair(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) throw InvalidInput("psd_repair needs a square matrix");
  const double lmin = min_eigenvalue(a);
  const double diag_err = (a.diagonal().array() - 1.0).abs().maxCoeff();
  if (lmin >= -tol && diag_err <= tol) return a;
  const Matrix clipped = lmin < -tol ? project_psd(a) : symmetrized(a);
  return unit_diagonal_congruence(clipped);
}

ShapedCovariance krivine_shape(const Matrix& v, const Matrix& z, const Matrix& w,
                               double rho, double tol) {
  const Eigen::Index d = z.rows();
  if (z.cols() != d || v.rows() != d || v.cols() != d || w.rows() != d || w.cols() != d)
    throw InvalidInput("krivine_shape needs three d x d blocks");
  Matrix joint(2 * d, 2 * d);
  joint << v, z, z.transpose(), w;
  if (!joint.allFinite()) throw InvalidInput("krivine_shape input has NaN or Inf");
  const double lmin = min_eigenvalue(joint);
  if (lmin < -tol)
    throw InvalidInput("krivine_shape input is not PSD (lambda_min = " +
                       std::to_string(lmin) + ")");
  const double diag_err = (joint.diagonal().array() - 1.0).abs().maxCoeff();
  if (diag_err > tol)
    throw InvalidInput("krivine_shape input diagonal deviates from 1 by " +
                       std::to_string(diag_err));

  Matrix q(2 * d, 2 * d);
  q.topLeftCorner(d, d) = (kGamma * v).array().sinh().matrix();
  q.topRightCorner(d, d) = sin_target(z);
  q.bottomLeftCorner(d, d) = q.topRightCorner(d, d).transpose();
  q.bottomRightCorner(d, d) = (kGamma * w).array().sinh().matrix();
  ShapedCovariance out;
  out.q = psd_repair(symmetrized(q));
  out.rho = rho;
  return out;
}

ShapedCovariance krivine_shape(const ScaledSolution& s, double tol) {
  return krivine_shape(s.v, s.z, s.w, s.rho, tol);
}

double shaping_objective(const Matrix& q, const Matrix& z) {
  const Eigen::Index d = z.rows();
  return (q.topRightCorner(d, d) - sin_target(z)).squaredNorm();
}

ShapedCovariance numeric_shape(const Matrix& z, const NumericShapeConfig& cfg,
                               double rho) {
  const Eigen::Index d = z.rows();
  if (z.cols() != d || d < 1) throw InvalidInput("numeric_shape needs a square Z");
  if (!z.allFinite()) throw InvalidInput("numeric_shape input has NaN or Inf");
  const Matrix target = sin_target(z);

  auto project_affine = [&](Matrix m) {
    m.diagonal().setOnes();
    m.topRightCorner(d, d) = target;
    m.bottomLeftCorner(d, d) = target.transpose();
    return m;
  };

  Matrix y = project_affine(Matrix::Identity(2 * d, 2 * d));
  Matrix correction = Matrix::Zero(2 * d, 2 * d);
  Matrix best;
  double best_err = std::numeric_limits<double>::infinity();
  for (long it = 0; it < cfg.max_iterations; ++it) {
    const Matrix r = y - correction;
    const Matrix x = project_psd(r);
    correction = x - r;
    y = project_affine(x);

    const Matrix candidate = unit_diagonal_congruence(x);
    const double err = (candidate.topRightCorner(d, d) - target).cwiseAbs().maxCoeff();
    if (err < best_err) {
      best_err = err;
      best = candidate;
    }
    if (err <= cfg.entry_tol) break;
  }
  const double objective = shaping_objective(best, z);
  if (objective > cfg.failure_objective)
    throw ConvergenceError("numeric covariance shaping stalled at objective " +
                               std::to_string(objective),
                           objective, 0.0, cfg.max_iterations);
  ShapedCovariance out;
  out.q = best;
  out.rho = rho;
  return out;
}

}  // namespace qsdp
