#pragma once

// Two-layer network representations and the exact reductions between them:
//
//   PolyNetwork       f(x) = sum_j sigma(x'q_j) alpha_j, sigma(t) = a t^2 + b t + c,
//                     q_j integer with entries in {-M, -M+2, ..., M}
//   BilinearNetwork   f(x) = sum_j (x'u_j)(x'v_j) alpha_j with u_j, v_j in {-1,+1}
//                     (or u_j' X v_j alpha_j on a lifted input matrix X)
//   QuadraticNetwork  f(x) = sum_j (x'w_j)^2 alpha_j with w_j in {-1,0,+1}
//
// All types validate on construction and are immutable afterwards.

#include <span>
#include <vector>

#include "qsdp/types.hpp"

namespace qsdp {

/// Coefficients of sigma(t) = a t^2 + b t + c.
struct Activation {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  friend bool operator==(const Activation&, const Activation&) = default;
};

/// Whether a bilinear/quadratic network consumes raw x or the lifted matrix.
struct InputKind {
  bool lifted = false;
  int levels = 1;  ///< M of the replication x ⊗ 1_M (1 for raw inputs)
  Activation activation{};

  static InputKind raw() { return {}; }
  static InputKind lifted_input(int levels, Activation act) {
    return {true, levels, act};
  }
  friend bool operator==(const InputKind&, const InputKind&) = default;
};

class LiftedInput {
 public:
  /// Takes a (dM+1)x(dM+1) symmetric matrix; throws InvalidInput otherwise.
  explicit LiftedInput(Matrix lifted);

  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

 private:
  Matrix matrix_;
};

class PolyNetwork {
 public:
  PolyNetwork(IntMatrix weights, int levels, Activation activation,
              Vector alpha);

  const IntMatrix& weights() const { return weights_; }
  int levels() const { return levels_; }
  const Activation& activation() const { return activation_; }
  const Vector& alpha() const { return alpha_; }
  Eigen::Index neurons() const { return weights_.rows(); }
  Eigen::Index input_dim() const { return weights_.cols(); }

 private:
  IntMatrix weights_;
  int levels_;
  Activation activation_;
  Vector alpha_;
};

class BilinearNetwork {
 public:
  /// `alpha` is m x C; C = 1 for scalar-output networks.
  BilinearNetwork(SignMatrix u, SignMatrix v, Matrix alpha,
                  InputKind input_kind = InputKind::raw());

  const SignMatrix& u() const { return u_; }
  const SignMatrix& v() const { return v_; }
  const Matrix& alpha() const { return alpha_; }
  const InputKind& input_kind() const { return input_kind_; }
  Eigen::Index neurons() const { return u_.rows(); }
  Eigen::Index input_dim() const { return u_.cols(); }
  Eigen::Index outputs() const { return alpha_.cols(); }
  /// True when every second-layer entry is bitwise equal to the first.
  bool uniform_alpha() const;

 private:
  SignMatrix u_;
  SignMatrix v_;
  Matrix alpha_;
  InputKind input_kind_;
};

class QuadraticNetwork {
 public:
  QuadraticNetwork(SignMatrix w, Vector alpha,
                   InputKind input_kind = InputKind::raw());

  const SignMatrix& w() const { return w_; }
  const Vector& alpha() const { return alpha_; }
  const InputKind& input_kind() const { return input_kind_; }
  Eigen::Index neurons() const { return w_.rows(); }
  Eigen::Index input_dim() const { return w_.cols(); }

 private:
  SignMatrix w_;
  Vector alpha_;
  InputKind input_kind_;
};

double poly_forward(const PolyNetwork& net, std::span<const double> x);

/// Raw-input bilinear network, scalar output (column 0 when C > 1).
double bilinear_forward(const BilinearNetwork& net, std::span<const double> x);
double bilinear_forward(const BilinearNetwork& net, const LiftedInput& lifted);
/// Raw-input forward returning all C outputs.
Vector bilinear_forward_vector(const BilinearNetwork& net,
                               std::span<const double> x);

double quadratic_forward(const QuadraticNetwork& net,
                         std::span<const double> x);
double quadratic_forward(const QuadraticNetwork& net,
                         const LiftedInput& lifted);

/// Row-wise forward over a data matrix (raw inputs). Returns n x C.
Matrix bilinear_predict(const BilinearNetwork& net, const Matrix& x);
Vector quadratic_predict(const QuadraticNetwork& net, const Matrix& x);

LiftedInput lift_input(std::span<const double> x, int levels,
                       const Activation& activation);

/// Canonical M-sign decomposition of an element of Q_M: leading +1s.
std::vector<std::int8_t> decompose_level(int q, int levels);

BilinearNetwork multilevel_to_binary(const PolyNetwork& net);

QuadraticNetwork symmetrize_to_quadratic(const BilinearNetwork& net);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace qsdp
