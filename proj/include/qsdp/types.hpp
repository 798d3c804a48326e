#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace qsdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Row-major ±1 (or {-1,0,1}) weight matrix, one row per hidden neuron.
using SignMatrix =
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IntMatrix =
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace qsdp
