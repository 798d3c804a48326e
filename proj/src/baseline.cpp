#include "qsdp/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "qsdp/errors.hpp"

namespace qsdp {

namespace {

double sign_or_plus(double t) { return t >= 0.0 ? 1.0 : -1.0; }

// d loss / d yhat for loss_value's normalisation
Matrix loss_derivative(LossKind kind, const Matrix& yhat, const Matrix& y) {
  const double inv_n = 1.0 / static_cast<double>(yhat.rows());
  switch (kind) {
    case LossKind::squared:
      return 2.0 * inv_n * (yhat - y);
    case LossKind::absolute:
      return inv_n * (yhat - y).unaryExpr([](double t) {
        return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
      });
    case LossKind::hinge: {
      Matrix g = Matrix::Zero(yhat.rows(), yhat.cols());
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index k = 0; k < g.cols(); ++k)
          if (y(i, k) * yhat(i, k) < 1.0) g(i, k) = -inv_n * y(i, k);
      return g;
    }
  }
  throw InvalidInput("unknown loss");
}

double soft(double t, double k) {
  return t > k ? t - k : (t < -k ? t + k : 0.0);
}

std::vector<std::int8_t> bits_to_signs(unsigned long long bits, Eigen::Index d) {
  std::vector<std::int8_t> s(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) s[static_cast<std::size_t>(i)] = (bits >> i) & 1ull ? 1 : -1;
  return s;
}

Vector atom_column(const Matrix& x, const std::vector<std::int8_t>& u,
                   const std::vector<std::int8_t>& v) {
  Vector xu = Vector::Zero(x.rows()), xv = Vector::Zero(x.rows());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    xu += u[static_cast<std::size_t>(k)] * x.col(k);
    xv += v[static_cast<std::size_t>(k)] * x.col(k);
  }
  return xu.cwiseProduct(xv);
}

Vector lasso_cd(const Matrix& a, const Vector& y, double lambda, double tol) {
  const Eigen::Index p = a.cols();
  const double n = static_cast<double>(a.rows());
  const Vector sq = a.colwise().squaredNorm();
  Vector c = Vector::Zero(p);
  Vector r = y;
  for (long sweep = 0; sweep < 1000000; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sq(j) == 0.0) continue;
      const double rho = a.col(j).dot(r) + sq(j) * c(j);  // a_j' r_{-j}
      const double next = soft(2.0 * rho / n, lambda) / (2.0 * sq(j) / n);
      const double delta = next - c(j);
      if (delta != 0.0) {
        r.noalias() -= delta * a.col(j);
        c(j) = next;
        max_step = std::max(max_step, std::abs(delta) * std::sqrt(sq(j)));
      }
    }
    if (max_step <= tol) return c;
  }
  throw ConvergenceError("lasso coordinate descent did not converge", 0.0, 0.0, 1000000);
}

// min (1/n)||A c - y||_1 + lambda ||c||_1 by ADMM on z = A c - y, w = c.
Vector lad_lasso(const Matrix& a, const Vector& y, double lambda, double tol) {
  const Eigen::Index n = a.rows(), p = a.cols();
  const double sigma = 1.0;
  const Eigen::LLT<Matrix> chol(a.transpose() * a + Matrix::Identity(p, p));
  Vector c = Vector::Zero(p), w = Vector::Zero(p), u2 = Vector::Zero(p);
  Vector z = -y, u1 = Vector::Zero(n);
  const long cap = 2000000;
  for (long it = 0; it < cap; ++it) {
    c = chol.solve(a.transpose() * (z + y - u1) + (w - u2));
    const Vector ac = a * c;
    const Vector z_old = z, w_old = w;
    const Vector tz = ac - y + u1;
    for (Eigen::Index i = 0; i < n; ++i)
      z(i) = soft(tz(i), 1.0 / (static_cast<double>(n) * sigma));
    for (Eigen::Index j = 0; j < p; ++j) w(j) = soft(c(j) + u2(j), lambda / sigma);
    const Vector r1 = ac - y - z, r2 = c - w;
    u1 += r1;
    u2 += r2;
    const double primal = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
    const double dual = sigma * (a.transpose() * (z - z_old) + (w - w_old)).norm();
    if (primal <= tol && dual <= tol) return w;
  }
  throw ConvergenceError("absolute-loss oracle ADMM did not converge", 0.0, 0.0, cap);
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.m < 1) throw InvalidInput("training needs m >= 1");
  if (!(c.learning_rate > 0.0)) throw InvalidInput("learning rate must be > 0");
  if (c.epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (c.batch_size < 1) throw InvalidInput("batch size must be >= 1");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0))
    throw InvalidInput("momentum must lie in [0, 1)");
}

BilinearGradient bilinear_loss_gradient(const Matrix& x, const Matrix& y,
                                        const Matrix& u, const Matrix& v,
                                        const Matrix& alpha, LossKind loss) {
  const Matrix a = x * u.transpose();
  const Matrix b = x * v.transpose();
  const Matrix h = a.cwiseProduct(b);
  const Matrix yhat = h * alpha;
  const Matrix g = loss_derivative(loss, yhat, y);
  const Matrix dh = g * alpha.transpose();
  BilinearGradient out;
  out.loss = loss_value(loss, yhat, y);
  out.u = dh.cwiseProduct(b).transpose() * x;
  out.v = dh.cwiseProduct(a).transpose() * x;
  out.alpha = h.transpose() * g;
  return out;
}

TrainResult sgd_train_bilinear(const Matrix& x, const Matrix& y, const TrainConfig& cfg) {
  validate(cfg);
  if (x.rows() != y.rows() || x.rows() == 0)
    throw InvalidInput("training data must be non-empty with matching rows");
  check_targets(cfg.loss, y);
  const Eigen::Index n = x.rows(), d = x.cols(), m = cfg.m;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;

  TrainResult out;
  out.u.resize(m, d);
  out.v.resize(m, d);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < d; ++k) out.u(j, k) = normal(rng);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < d; ++k) out.v(j, k) = normal(rng);
  out.alpha = Matrix::Constant(m, y.cols(), 1.0 / static_cast<double>(m));

  Matrix mu = Matrix::Zero(m, d), mv = Matrix::Zero(m, d);
  Matrix ma = Matrix::Zero(m, y.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double lr_first = cfg.scale_lr_with_m
                              ? cfg.learning_rate * static_cast<double>(m)
                              : cfg.learning_rate;
  const auto start = std::chrono::steady_clock::now();
  long last_finite = 0;

  for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index s = 0; s < n; s += cfg.batch_size) {
      const Eigen::Index b = std::min(cfg.batch_size, n - s);
      Matrix xb(b, d), yb(b, y.cols());
      for (Eigen::Index i = 0; i < b; ++i) {
        xb.row(i) = x.row(order[static_cast<std::size_t>(s + i)]);
        yb.row(i) = y.row(order[static_cast<std::size_t>(s + i)]);
      }
      const auto g = bilinear_loss_gradient(xb, yb, out.u, out.v, out.alpha, cfg.loss);
      mu = cfg.momentum * mu - lr_first * g.u;
      mv = cfg.momentum * mv - lr_first * g.v;
      out.u += mu;
      out.v += mv;
      if (cfg.second_layer == SecondLayerMode::free) {
        ma = cfg.momentum * ma - cfg.learning_rate * g.alpha;
        out.alpha += ma;
      }
    }
    const Matrix yhat = (x * out.u.transpose()).cwiseProduct(x * out.v.transpose()) * out.alpha;
    const double l = loss_value(cfg.loss, yhat, y);
    if (!std::isfinite(l))
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                 "; last finite epoch " + std::to_string(last_finite),
                             last_finite);
    last_finite = epoch;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.curve.push_back({epoch, secs, l, accuracy(yhat, y).value_or(std::nan(""))});
  }
  return out;
}

double quantization_scalar(const Matrix& zhat, const Matrix& zstar, bool paper_formula) {
  const double num = (zhat.array() * zstar.array()).sum();
  const double den = paper_formula ? zstar.squaredNorm() : zhat.squaredNorm();
  return den == 0.0 ? 0.0 : num / den;
}

BilinearNetwork post_training_quantize(const Matrix& u, const Matrix& v,
                                       const Vector& alpha, bool paper_formula) {
  if (u.rows() != v.rows() || u.cols() != v.cols() || u.rows() == 0)
    throw InvalidInput("U and V must be non-empty with equal shapes");
  const Eigen::Index m = u.rows();
  Vector a = alpha.size() == 0 ? Vector::Constant(m, 1.0 / static_cast<double>(m)) : alpha;
  if (a.size() != m) throw InvalidInput("alpha length must equal m");
  const Matrix su = u.unaryExpr(&sign_or_plus);
  const Matrix sv = v.unaryExpr(&sign_or_plus);
  const Matrix zhat = su.transpose() * sv;
  const Matrix zstar = u.transpose() * a.asDiagonal() * v;
  const double c = quantization_scalar(zhat, zstar, paper_formula);
  return BilinearNetwork(su.cast<std::int8_t>(), sv.cast<std::int8_t>(),
                         Matrix(Matrix::Constant(m, 1, c)));
}

double oracle_objective(const Matrix& x, const Matrix& y, double beta, LossKind loss,
                        const std::vector<Atom>& atoms) {
  Vector yhat = Vector::Zero(x.rows());
  double l1 = 0.0;
  for (const auto& at : atoms) {
    yhat += at.coefficient * atom_column(x, at.u, at.v);
    l1 += std::abs(at.coefficient);
  }
  return loss_value(loss, yhat, y) + beta * static_cast<double>(x.cols()) * l1;
}

DictionaryOracleResult dictionary_oracle(const Matrix& x, const Matrix& y, double beta,
                                         LossKind loss, double tol) {
  const Eigen::Index d = x.cols();
  if (d > kOracleMaxDim)
    throw InvalidInput("dictionary oracle limited to d <= " + std::to_string(kOracleMaxDim) +
                       "; d = " + std::to_string(d) + " needs " +
                       std::to_string(1ull << (2 * d - 1)) + " atoms");
  if (d < 1 || y.cols() != 1 || y.rows() != x.rows())
    throw InvalidInput("oracle needs scalar targets matching X");
  if (loss == LossKind::hinge) throw InvalidInput("oracle supports squared or absolute loss");
  if (beta < 0.0) throw InvalidInput("beta must be nonnegative");

  // (u, v) ~ (-u, -v): fix u_0 = +1
  std::vector<std::pair<unsigned long long, unsigned long long>> pairs;
  for (unsigned long long bu = 0; bu < (1ull << d); ++bu) {
    if (!(bu & 1ull)) continue;
    for (unsigned long long bv = 0; bv < (1ull << d); ++bv) pairs.emplace_back(bu, bv);
  }
  Matrix a(x.rows(), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t j = 0; j < pairs.size(); ++j)
    a.col(static_cast<Eigen::Index>(j)) =
        atom_column(x, bits_to_signs(pairs[j].first, d), bits_to_signs(pairs[j].second, d));

  const double lambda = beta * static_cast<double>(d);
  const Vector target = y.col(0);
  const Vector c = loss == LossKind::squared ? lasso_cd(a, target, lambda, tol)
                                             : lad_lasso(a, target, lambda, tol);
  DictionaryOracleResult out;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const double cj = c(static_cast<Eigen::Index>(j));
    if (cj != 0.0)
      out.atoms.push_back({bits_to_signs(pairs[j].first, d), bits_to_signs(pairs[j].second, d), cj});
  }
  out.loss = loss_value(loss, a * c, target);
  out.objective = out.loss + lambda * c.lpNorm<1>();
  return out;
}

std::optional<double> accuracy(const Matrix& yhat, const Matrix& y) {
  if (yhat.rows() != y.rows() || yhat.cols() != y.cols())
    throw InvalidInput("prediction and target shapes differ");
  if (y.rows() == 0) return std::nullopt;
  Eigen::Index hits = 0;
  if (y.cols() == 1) {
    if (!(y.array() == 1.0 || y.array() == -1.0).all()) return std::nullopt;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (sign_or_plus(yhat(i, 0)) == y(i, 0)) ++hits;
  } else {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      Eigen::Index truth = 0, guess = 0;
      if (y.row(i).sum() != 1.0 || !(y.row(i).array() == 0.0 || y.row(i).array() == 1.0).all())
        return std::nullopt;
      y.row(i).maxCoeff(&truth);
      yhat.row(i).maxCoeff(&guess);
      if (truth == guess) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(y.rows());
}

Matrix network_predict(const Network& net, const Matrix& x) {
  auto rows = [&](auto&& f, Eigen::Index outputs) {
    Matrix out(x.rows(), outputs);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vector xi = x.row(i).transpose();
      out(i, 0) = f(as_span(xi));
    }
    return out;
  };
  return std::visit(
      [&](const auto& n) -> Matrix {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, PolyNetwork>) {
          return rows([&](auto xi) { return poly_forward(n, xi); }, 1);
        } else {
          const auto& kind = n.input_kind();
          if (!kind.lifted) {
            if constexpr (std::is_same_v<T, BilinearNetwork>) return bilinear_predict(n, x);
            else return quadratic_predict(n, x);
          }
          if constexpr (std::is_same_v<T, BilinearNetwork>)
            if (n.outputs() != 1)
              throw InvalidInput("lifted vector-output networks are not supported");
          return rows(
              [&](auto xi) {
                const auto lifted = lift_input(xi, kind.levels, kind.activation);
                if constexpr (std::is_same_v<T, BilinearNetwork>)
                  return bilinear_forward(n, lifted);
                else
                  return quadratic_forward(n, lifted);
              },
              1);
        }
      },
      net);
}

Metrics evaluate(const Network& net, const Matrix& x, const Matrix& y, LossKind loss,
                 double beta) {
  const Matrix yhat = network_predict(net, x);
  if (yhat.rows() != y.rows() || yhat.cols() != y.cols())
    throw InvalidInput("network outputs " + std::to_string(yhat.cols()) +
                       " columns but targets have " + std::to_string(y.cols()));
  const double l1 = std::visit([](const auto& n) { return n.alpha().template lpNorm<1>(); }, net);
  Metrics out;
  out.loss = loss_value(loss, yhat, y);
  out.regularizer = beta * static_cast<double>(x.cols()) * l1;
  out.objective = out.loss + out.regularizer;
  out.accuracy = accuracy(yhat, y);
  return out;
}

}  // namespace qsdp
