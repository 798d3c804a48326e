#pragma once

#include <random>

#include "qsdp/types.hpp"

namespace testing {

inline qsdp::Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  qsdp::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline qsdp::SignMatrix random_signs(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& rng) {
  std::bernoulli_distribution coin;
  qsdp::SignMatrix s(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) s(i, j) = coin(rng) ? 1 : -1;
  return s;
}

// Normalized random Gram matrix: PSD with unit diagonal, rank `rank`.
inline qsdp::Matrix random_correlation(Eigen::Index k, Eigen::Index rank,
                                       std::mt19937_64& rng) {
  const qsdp::Matrix f = gaussian(k, rank, rng);
  qsdp::Matrix g = f * f.transpose();
  const qsdp::Vector s = g.diagonal().cwiseSqrt().cwiseInverse();
  g = s.asDiagonal() * g * s.asDiagonal();
  g.diagonal().setOnes();
  return g;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testing
