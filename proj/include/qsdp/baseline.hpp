#pragma once

// Comparison methods: a real-valued bilinear network trained by mini-batch
// SGD with momentum and then quantized, and an exact dictionary oracle that
// solves the quantized problem with unbounded width for small d.

#include <cstdint>
#include <optional>
#include <vector>

#include "qsdp/errors.hpp"
#include "qsdp/loss.hpp"
#include "qsdp/model.hpp"
#include "qsdp/network_io.hpp"
#include "qsdp/types.hpp"

namespace qsdp {

enum class SecondLayerMode { fixed_uniform, free };

struct TrainConfig {
  Eigen::Index m = 100;
  double learning_rate = 1e-3;
  /// Multiply the first-layer step by m, which keeps the per-step change of
  /// the output independent of width when alpha = 1/m.
  bool scale_lr_with_m = false;
  double momentum = 0.9;
  long epochs = 100;
  Eigen::Index batch_size = 32;
  std::uint64_t seed = 0;
  SecondLayerMode second_layer = SecondLayerMode::fixed_uniform;
  LossKind loss = LossKind::squared;
};

void validate(const TrainConfig& config);

struct CurvePoint {
  long epoch = 0;
  double seconds = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;  ///< NaN when targets are not classification labels
};

struct TrainResult {
  Matrix u;      ///< m x d
  Matrix v;      ///< m x d
  Matrix alpha;  ///< m x C
  std::vector<CurvePoint> curve;
};

/// Loss became NaN or Inf; carries the last epoch with a finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, long last_finite_epoch)
      : Error(what), last_finite_epoch_(last_finite_epoch) {}
  long last_finite_epoch() const { return last_finite_epoch_; }

 private:
  long last_finite_epoch_;
};

struct BilinearGradient {
  double loss = 0.0;
  Matrix u, v, alpha;
};

/// Loss of yhat = ((X U') o (X V')) alpha and its gradient in U, V, alpha.
/// Absolute and hinge use the subgradient that is 0 at the kink.
BilinearGradient bilinear_loss_gradient(const Matrix& x, const Matrix& y,
                                        const Matrix& u, const Matrix& v,
                                        const Matrix& alpha, LossKind loss);

TrainResult sgd_train_bilinear(const Matrix& x, const Matrix& y,
                               const TrainConfig& config);

/// c minimizing ||c zhat - zstar||_F^2, or <zhat, zstar>/<zstar, zstar> with
/// `paper_formula`. Returns 0 when the denominator vanishes.
double quantization_scalar(const Matrix& zhat, const Matrix& zstar,
                           bool paper_formula = false);

/// Signs of the trained weights with one uniform second-layer scalar fitted to
/// Z* = sum_j alpha_j u_j v_j' (alpha_j = 1/m when `alpha` is empty).
BilinearNetwork post_training_quantize(const Matrix& u, const Matrix& v,
                                       const Vector& alpha = Vector(),
                                       bool paper_formula = false);

struct Atom {
  std::vector<std::int8_t> u, v;
  double coefficient = 0.0;
};

struct DictionaryOracleResult {
  double objective = 0.0;
  double loss = 0.0;
  std::vector<Atom> atoms;  ///< nonzero coefficients only
};

inline constexpr Eigen::Index kOracleMaxDim = 6;

/// Exact minimum of loss + beta d sum|alpha| over quantized bilinear networks
/// of any width (squared or absolute loss, d <= 6).
DictionaryOracleResult dictionary_oracle(const Matrix& x, const Matrix& y,
                                         double beta, LossKind loss,
                                         double tol = 1e-10);

/// loss + beta d sum|alpha| for a list of atoms.
double oracle_objective(const Matrix& x, const Matrix& y, double beta,
                        LossKind loss, const std::vector<Atom>& atoms);

struct Metrics {
  double objective = 0.0;
  double loss = 0.0;
  double regularizer = 0.0;
  std::optional<double> accuracy;
};

/// sign agreement (+1 on ties) for scalar outputs, argmax for vector outputs;
/// nullopt when y is not a label matrix.
std::optional<double> accuracy(const Matrix& yhat, const Matrix& y);

Matrix network_predict(const Network& net, const Matrix& x);
Metrics evaluate(const Network& net, const Matrix& x, const Matrix& y,
                 LossKind loss, double beta);

}  // namespace qsdp
