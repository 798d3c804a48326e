#pragma once

// Sign-Gaussian sampling of quantized first-layer weights and assignment of
// the second layer. Neuron j draws from its own mt19937_64 stream seeded by
// splitmix64(seed, j), so output does not depend on the thread count.

#include <cstdint>
#include <vector>

#include "qsdp/model.hpp"
#include "qsdp/shaping.hpp"

namespace qsdp {

struct SignPair {
  SignMatrix u;  ///< count x d
  SignMatrix v;  ///< count x d
};

/// Counter-derived substream seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

SignPair sign_gaussian(const ShapedCovariance& q, Eigen::Index count,
                       std::uint64_t seed, unsigned threads = 1);

/// Uniform second layer rho pi / (gamma m); rho = 0 gives the zero network.
BilinearNetwork assemble_network(SignMatrix u, SignMatrix v, double rho,
                                 Eigen::Index m);

/// sign_gaussian followed by assemble_network with the covariance's rho.
BilinearNetwork sample_network(const ShapedCovariance& q, Eigen::Index m,
                               std::uint64_t seed, unsigned threads = 1);

/// Class k contributes m/C neurons sampled from classes[k] with second-layer
/// rows rho_k C pi / (gamma m) e_k. Class 0 uses `seed` itself, so C = 1
/// reproduces sample_network.
BilinearNetwork sample_vector_output(const std::vector<ShapedCovariance>& classes,
                                     Eigen::Index m, std::uint64_t seed,
                                     unsigned threads = 1);

struct TheoremBound {
  double epsilon = 0.1;
  double lipschitz = 1.0;  ///< L_c
  double row_norm = 1.0;   ///< R_m
  double d = 2.0;
  double c1 = 1.0;
};

/// ceil(c1 L^2 R^4 d ln d / eps^2)
long long required_m(const TheoremBound& bound);

/// max |(1/m) sum_j u_j v_j' - (2/pi) arcsin(Q12)|
double moment_deviation(const SignPair& signs, const ShapedCovariance& q);

}  // namespace qsdp
