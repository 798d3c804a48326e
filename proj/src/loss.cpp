#include "qsdp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qsdp/errors.hpp"

namespace qsdp {

LossKind parse_loss(std::string_view name) {
  if (name == "squared") return LossKind::squared;
  if (name == "absolute") return LossKind::absolute;
  if (name == "hinge") return LossKind::hinge;
  throw InvalidInput("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared: return "squared";
    case LossKind::absolute: return "absolute";
    case LossKind::hinge: return "hinge";
  }
  return "?";
}

void check_targets(LossKind kind, const Matrix& y) {
  if (!y.allFinite()) throw InvalidInput("targets contain NaN or Inf");
  if (kind != LossKind::hinge) return;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 1.0 && y(i) != -1.0)
      throw InvalidInput("hinge loss needs targets in {-1, +1}");
}

double loss_value(LossKind kind, const Matrix& yhat, const Matrix& y) {
  if (yhat.rows() != y.rows() || yhat.cols() != y.cols())
    throw InvalidInput("prediction and target shapes differ");
  if (y.rows() == 0) return 0.0;
  check_targets(kind, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = yhat(i), t = y(i);
    switch (kind) {
      case LossKind::squared: total += (p - t) * (p - t); break;
      case LossKind::absolute: total += std::abs(p - t); break;
      case LossKind::hinge: total += std::max(0.0, 1.0 - t * p); break;
    }
  }
  return total / static_cast<double>(y.rows());
}

Matrix loss_prox(LossKind kind, const Matrix& v, const Matrix& y, double t) {
  return loss_prox(kind, v, y, t, v.rows());
}

Matrix loss_prox(LossKind kind, const Matrix& v, const Matrix& y, double t,
                 Eigen::Index rows) {
  if (v.rows() != y.rows() || v.cols() != y.cols())
    throw InvalidInput("prox argument and target shapes differ");
  if (!(t > 0.0)) throw InvalidInput("prox step must be positive");
  check_targets(kind, y);
  const double h = t / static_cast<double>(rows);  // step per sample
  Matrix z(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double vi = v(i), yi = y(i);
    switch (kind) {
      case LossKind::squared:
        z(i) = (vi + 2.0 * h * yi) / (1.0 + 2.0 * h);
        break;
      case LossKind::absolute: {
        const double r = vi - yi;
        z(i) = yi + std::copysign(std::max(std::abs(r) - h, 0.0), r);
        break;
      }
      case LossKind::hinge: {
        // in s = y z: minimise h max(0, 1 - s) + (s - y v)^2 / 2
        const double w = yi * vi;
        double s;
        if (w >= 1.0)
          s = w;
        else if (w <= 1.0 - h)
          s = w + h;
        else
          s = 1.0;
        z(i) = yi * s;
        break;
      }
    }
  }
  return z;
}

}  // namespace qsdp
