#include "qsdp/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "qsdp/errors.hpp"

namespace qsdp {

namespace {

void require_signs(const SignMatrix& m, const char* name) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 1 && m(i, j) != -1)
        throw InvalidInput(std::string(name) + " has a non-sign entry at (" +
                           std::to_string(i) + ", " + std::to_string(j) + ")");
}

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite())
    throw InvalidInput(std::string(name) + " contains NaN or Inf");
}

void require_dim(std::size_t got, Eigen::Index want) {
  if (static_cast<Eigen::Index>(got) != want)
    throw InvalidInput("input dimension " + std::to_string(got) +
                       " does not match network dimension " +
                       std::to_string(want));
}

double dot_row(const SignMatrix& w, Eigen::Index row,
               std::span<const double> x) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < w.cols(); ++k) s += w(row, k) * x[k];
  return s;
}

// u' A v with sign vectors, summed in a fixed order.
double bilinear_form(const SignMatrix& u, const SignMatrix& v,
                     Eigen::Index row, const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index p = 0; p < a.rows(); ++p) {
    double inner = 0.0;
    for (Eigen::Index q = 0; q < a.cols(); ++q) inner += a(p, q) * v(row, q);
    s += u(row, p) * inner;
  }
  return s;
}

}  // namespace

LiftedInput::LiftedInput(Matrix lifted) : matrix_(std::move(lifted)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1)
    throw InvalidInput("lifted input must be a non-empty square matrix");
  require_finite(matrix_, "lifted input");
  if (!(matrix_ - matrix_.transpose()).isZero(0.0))
    throw InvalidInput("lifted input must be symmetric");
}

PolyNetwork::PolyNetwork(IntMatrix weights, int levels, Activation activation,
                         Vector alpha)
    : weights_(std::move(weights)),
      levels_(levels),
      activation_(activation),
      alpha_(std::move(alpha)) {
  if (levels_ < 1) throw InvalidInput("level parameter M must be >= 1");
  if (alpha_.size() != weights_.rows())
    throw InvalidInput("alpha length must equal the number of neurons");
  for (Eigen::Index j = 0; j < weights_.rows(); ++j)
    for (Eigen::Index i = 0; i < weights_.cols(); ++i) {
      const int q = weights_(j, i);
      if (std::abs(q) > levels_ || (q + levels_) % 2 != 0)
        throw InvalidInput("weight " + std::to_string(q) + " at (" +
                           std::to_string(j) + ", " + std::to_string(i) +
                           ") is not in Q_" + std::to_string(levels_));
    }
  if (!alpha_.allFinite()) throw InvalidInput("alpha contains NaN or Inf");
}

BilinearNetwork::BilinearNetwork(SignMatrix u, SignMatrix v, Matrix alpha,
                                 InputKind input_kind)
    : u_(std::move(u)),
      v_(std::move(v)),
      alpha_(std::move(alpha)),
      input_kind_(input_kind) {
  if (u_.rows() != v_.rows() || u_.cols() != v_.cols())
    throw InvalidInput("U and V must have the same shape");
  if (alpha_.rows() != u_.rows() || alpha_.cols() < 1)
    throw InvalidInput("alpha must have one row per neuron");
  require_signs(u_, "U");
  require_signs(v_, "V");
  require_finite(alpha_, "alpha");
  if (input_kind_.lifted && input_kind_.levels < 1)
    throw InvalidInput("lifted input kind needs M >= 1");
}

bool BilinearNetwork::uniform_alpha() const {
  if (alpha_.size() == 0) return true;
  const double first = alpha_(0, 0);
  for (Eigen::Index i = 0; i < alpha_.rows(); ++i)
    for (Eigen::Index k = 0; k < alpha_.cols(); ++k)
      if (std::memcmp(&alpha_(i, k), &first, sizeof(double)) != 0) return false;
  return true;
}

QuadraticNetwork::QuadraticNetwork(SignMatrix w, Vector alpha,
                                   InputKind input_kind)
    : w_(std::move(w)), alpha_(std::move(alpha)), input_kind_(input_kind) {
  if (alpha_.size() != w_.rows())
    throw InvalidInput("alpha length must equal the number of neurons");
  for (Eigen::Index i = 0; i < w_.rows(); ++i)
    for (Eigen::Index j = 0; j < w_.cols(); ++j)
      if (w_(i, j) < -1 || w_(i, j) > 1)
        throw InvalidInput("quadratic weights must lie in {-1, 0, +1}");
  if (!alpha_.allFinite()) throw InvalidInput("alpha contains NaN or Inf");
}

double poly_forward(const PolyNetwork& net, std::span<const double> x) {
  require_dim(x.size(), net.input_dim());
  const auto& [a, b, c] = net.activation();
  double out = 0.0;
  for (Eigen::Index j = 0; j < net.neurons(); ++j) {
    double t = 0.0;
    for (Eigen::Index i = 0; i < net.input_dim(); ++i)
      t += net.weights()(j, i) * x[i];
    out += (a * t * t + b * t + c) * net.alpha()(j);
  }
  return out;
}

Vector bilinear_forward_vector(const BilinearNetwork& net,
                               std::span<const double> x) {
  if (net.input_kind().lifted)
    throw InvalidInput("network expects a lifted input matrix");
  require_dim(x.size(), net.input_dim());
  Vector out = Vector::Zero(net.outputs());
  for (Eigen::Index j = 0; j < net.neurons(); ++j) {
    const double h = dot_row(net.u(), j, x) * dot_row(net.v(), j, x);
    out += h * net.alpha().row(j).transpose();
  }
  return out;
}

double bilinear_forward(const BilinearNetwork& net, std::span<const double> x) {
  return bilinear_forward_vector(net, x)(0);
}

double bilinear_forward(const BilinearNetwork& net, const LiftedInput& lifted) {
  if (!net.input_kind().lifted)
    throw InvalidInput("network expects a raw input vector");
  if (lifted.dim() != net.input_dim())
    throw InvalidInput("lifted input dimension does not match network");
  double out = 0.0;
  for (Eigen::Index j = 0; j < net.neurons(); ++j)
    out += bilinear_form(net.u(), net.v(), j, lifted.matrix()) *
           net.alpha()(j, 0);
  return out;
}

double quadratic_forward(const QuadraticNetwork& net,
                         std::span<const double> x) {
  if (net.input_kind().lifted)
    throw InvalidInput("network expects a lifted input matrix");
  require_dim(x.size(), net.input_dim());
  double out = 0.0;
  for (Eigen::Index j = 0; j < net.neurons(); ++j) {
    const double t = dot_row(net.w(), j, x);
    out += t * t * net.alpha()(j);
  }
  return out;
}

double quadratic_forward(const QuadraticNetwork& net,
                         const LiftedInput& lifted) {
  if (!net.input_kind().lifted)
    throw InvalidInput("network expects a raw input vector");
  if (lifted.dim() != net.input_dim())
    throw InvalidInput("lifted input dimension does not match network");
  double out = 0.0;
  for (Eigen::Index j = 0; j < net.neurons(); ++j)
    out += bilinear_form(net.w(), net.w(), j, lifted.matrix()) * net.alpha()(j);
  return out;
}

Matrix bilinear_predict(const BilinearNetwork& net, const Matrix& x) {
  if (net.input_kind().lifted)
    throw InvalidInput("batch prediction needs a raw-input network");
  if (x.cols() != net.input_dim())
    throw InvalidInput("data dimension " + std::to_string(x.cols()) +
                       " does not match network dimension " +
                       std::to_string(net.input_dim()));
  const Matrix xu = x * net.u().cast<double>().transpose();
  const Matrix xv = x * net.v().cast<double>().transpose();
  return xu.cwiseProduct(xv) * net.alpha();
}

Vector quadratic_predict(const QuadraticNetwork& net, const Matrix& x) {
  if (net.input_kind().lifted)
    throw InvalidInput("batch prediction needs a raw-input network");
  if (x.cols() != net.input_dim())
    throw InvalidInput("data dimension does not match network dimension");
  const Matrix xw = x * net.w().cast<double>().transpose();
  return xw.cwiseAbs2() * net.alpha();
}

LiftedInput lift_input(std::span<const double> x, int levels,
                       const Activation& activation) {
  if (levels < 1) throw InvalidInput("level parameter M must be >= 1");
  const Eigen::Index d = static_cast<Eigen::Index>(x.size());
  const Eigen::Index n = d * levels;
  Vector tilde(n);
  for (Eigen::Index i = 0; i < d; ++i)
    for (int k = 0; k < levels; ++k) tilde(i * levels + k) = x[i];

  Matrix lifted(n + 1, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lifted(i, j) = activation.a * (tilde(i) * tilde(j));
  lifted.topRightCorner(n, 1) = 0.5 * activation.b * tilde;
  lifted.bottomLeftCorner(1, n) = 0.5 * activation.b * tilde.transpose();
  lifted(n, n) = activation.c;
  return LiftedInput(std::move(lifted));
}

std::vector<std::int8_t> decompose_level(int q, int levels) {
  if (levels < 1 || std::abs(q) > levels || (q + levels) % 2 != 0)
    throw InvalidInput(std::to_string(q) + " is not in Q_" +
                       std::to_string(levels));
  const int plus = (levels + q) / 2;
  std::vector<std::int8_t> signs(levels, -1);
  for (int k = 0; k < plus; ++k) signs[k] = 1;
  return signs;
}

BilinearNetwork multilevel_to_binary(const PolyNetwork& net) {
  const int levels = net.levels();
  const Eigen::Index d = net.input_dim();
  const Eigen::Index lifted_dim = d * levels + 1;
  SignMatrix u(net.neurons(), lifted_dim);
  for (Eigen::Index j = 0; j < net.neurons(); ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto signs = decompose_level(net.weights()(j, i), levels);
      for (int k = 0; k < levels; ++k) u(j, i * levels + k) = signs[k];
    }
    u(j, lifted_dim - 1) = 1;
  }
  return BilinearNetwork(u, u, net.alpha(),
                         InputKind::lifted_input(levels, net.activation()));
}

QuadraticNetwork symmetrize_to_quadratic(const BilinearNetwork& net) {
  if (net.outputs() != 1)
    throw InvalidInput("symmetrization is defined for scalar-output networks");
  const Eigen::Index m = net.neurons();
  SignMatrix w(3 * m, net.input_dim());
  Vector alpha(3 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = net.alpha()(j, 0);
    for (Eigen::Index k = 0; k < net.input_dim(); ++k) {
      w(3 * j, k) = static_cast<std::int8_t>((net.u()(j, k) + net.v()(j, k)) / 2);
      w(3 * j + 1, k) = net.u()(j, k);
      w(3 * j + 2, k) = net.v()(j, k);
    }
    // 2u'Av = (u+v)'A(u+v) - u'Au - v'Av, with (u+v) = 2w.
    alpha(3 * j) = 2.0 * a;
    alpha(3 * j + 1) = -0.5 * a;
    alpha(3 * j + 2) = -0.5 * a;
  }
  return QuadraticNetwork(std::move(w), std::move(alpha), net.input_kind());
}

}  // namespace qsdp
