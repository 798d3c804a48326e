#pragma once

// Sample-averaged losses l(yhat, y) = (1/n) sum_i phi(yhat_i, y_i) and their
// proximal operators. Matrix-valued predictions (vector outputs) are averaged
// over rows and summed over columns.

#include <string_view>

#include "qsdp/types.hpp"

namespace qsdp {

enum class LossKind { squared, absolute, hinge };

LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind kind);

/// Throws InvalidInput when hinge targets are not +-1.
void check_targets(LossKind kind, const Matrix& y);

double loss_value(LossKind kind, const Matrix& yhat, const Matrix& y);

/// argmin_z l(z, y) + 1/(2t) ||z - v||^2, with l averaged over `rows` samples.
/// `rows` defaults to v.rows(), the normalisation used by loss_value.
Matrix loss_prox(LossKind kind, const Matrix& v, const Matrix& y, double t);
Matrix loss_prox(LossKind kind, const Matrix& v, const Matrix& y, double t,
                 Eigen::Index rows);

}  // namespace qsdp
