#pragma once

// Lower-bounding semidefinite programs for quantized two-layer networks.
//
//   bilinear:  min l(yhat, y) + beta d rho
//              yhat_i = 2 x_i' Z x_i,  Q = [V Z; Z' W] >= 0,  Q_jj = rho (j <= 2d)
//   quadratic: min l(yhat, y) + beta d (rho1 + rho2)
//              yhat_i = x_i'(Z1 - Z2)x_i,  Zk >= 0,  diag(Zk) = rhok
//   vector:    one bilinear block Q_k per output column k, summed regularizer
//
// The solver is a two-block ADMM. The first block holds the matrix variables
// restricted to the constant-diagonal subspace; the second holds their PSD
// copies together with an auxiliary prediction vector that carries the loss.
// The first-block update is an exact linear solve reduced by Woodbury to one
// n x n Cholesky factor, computed once per solve.

#include <cstdint>
#include <string_view>
#include <vector>

#include "qsdp/loss.hpp"
#include "qsdp/types.hpp"

namespace qsdp {

enum class SdpVariant { bilinear, quadratic, vector_output };

SdpVariant parse_variant(std::string_view name);
std::string_view to_string(SdpVariant v);

struct SolverConfig {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  long max_iterations = 100000;
  double penalty = 1.0;  ///< initial ADMM penalty sigma
  bool adapt_penalty = true;
  double adapt_factor = 2.0;  ///< largest change per update
  double adapt_ratio = 10.0;
  long adapt_interval = 100;  ///< checks every max(interval, iteration / 5)
  double relaxation = 1.6;  ///< over-relaxation in (0, 2)
  std::uint64_t seed = 0;   ///< echoed only; the iteration is deterministic
  double psd_tol = 1e-8;
  double diag_tol = 1e-8;
  /// Return the last iterate instead of throwing ConvergenceError.
  bool allow_unconverged = false;
};

struct SdpProblem {
  SdpVariant variant = SdpVariant::bilinear;
  Matrix x;  ///< n x d
  Matrix y;  ///< n x 1, or n x C for the vector variant
  LossKind loss = LossKind::squared;
  double beta = 0.0;
  SolverConfig config{};
};

/// Throws InvalidInput when the problem violates its invariants.
void validate(const SdpProblem& problem);

struct SdpSolution {
  SdpVariant variant = SdpVariant::bilinear;
  LossKind loss = LossKind::squared;
  double beta = 0.0;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  /// bilinear: {Q}; quadratic: {Z1, Z2}; vector: {Q_1, ..., Q_C}
  std::vector<Matrix> blocks;
  std::vector<double> rho;
  Matrix predictions;  ///< n x C
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  long iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  SolverConfig config{};

  Eigen::Index outputs() const {
    return variant == SdpVariant::vector_output
               ? static_cast<Eigen::Index>(blocks.size())
               : 1;
  }
  /// Off-diagonal block Z of the k-th bilinear block (bilinear/vector only).
  Matrix z(std::size_t k = 0) const;
  Matrix v(std::size_t k = 0) const;
  Matrix w(std::size_t k = 0) const;
};

SdpSolution solve_sdp(const SdpProblem& problem);

/// The certified lower bound d_SDP; refuses unconverged solutions.
double lower_bound(const SdpSolution& solution);

/// yhat recomputed from the matrix variables (n x C).
Matrix sdp_predictions(const SdpSolution& solution, const Matrix& x);

/// loss(yhat, y) + beta d sum(rho) recomputed from the matrix variables.
double sdp_objective(const SdpSolution& solution, const Matrix& x,
                     const Matrix& y);

struct InvariantReport {
  double min_eigenvalue = 0.0;  ///< over all PSD blocks
  double max_diag_error = 0.0;  ///< max |Q_jj - rho|
  bool ok = false;
};
InvariantReport check_invariants(const SdpSolution& solution);

}  // namespace qsdp
