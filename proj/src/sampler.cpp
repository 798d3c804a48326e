#include "qsdp/sampler.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "qsdp/errors.hpp"
#include "qsdp/linalg.hpp"

namespace qsdp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void sample_range(const Matrix& factor, Eigen::Index d, std::uint64_t seed,
                  Eigen::Index begin, Eigen::Index end, SignPair& out) {
  const Eigen::Index k = factor.cols();
  Vector g(k);
  Vector z(2 * d);
  for (Eigen::Index j = begin; j < end; ++j) {
    std::mt19937_64 engine(derive_seed(seed, static_cast<std::uint64_t>(j)));
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < k; ++i) g(i) = normal(engine);
    z.noalias() = factor * g;
    for (Eigen::Index i = 0; i < d; ++i) {
      out.u(j, i) = z(i) >= 0.0 ? 1 : -1;
      out.v(j, i) = z(d + i) >= 0.0 ? 1 : -1;
    }
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(splitmix64(root) ^ index);
}

SignPair sign_gaussian(const ShapedCovariance& q, Eigen::Index count,
                       std::uint64_t seed, unsigned threads) {
  if (count < 0) throw InvalidInput("neuron count must be nonnegative");
  if (q.q.rows() != q.q.cols() || q.q.rows() % 2 != 0 || q.q.rows() == 0)
    throw InvalidInput("covariance must be 2d x 2d");
  const Eigen::Index d = q.d();
  const Matrix factor = psd_factor(q.q);
  SignPair out{SignMatrix(count, d), SignMatrix(count, d)};

  threads = std::max(1u, threads);
  if (threads == 1 || count < 1024) {
    sample_range(factor, d, seed, 0, count, out);
    return out;
  }
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const Eigen::Index begin = std::min<Eigen::Index>(count, t * chunk);
    const Eigen::Index end = std::min<Eigen::Index>(count, begin + chunk);
    pool.emplace_back(sample_range, std::cref(factor), d, seed, begin, end,
                      std::ref(out));
  }
  for (auto& th : pool) th.join();
  return out;
}

BilinearNetwork assemble_network(SignMatrix u, SignMatrix v, double rho,
                                 Eigen::Index m) {
  if (m < 1 || u.rows() != m) throw InvalidInput("sign matrices must have m rows");
  if (rho < 0.0) throw InvalidInput("rho must be nonnegative");
  const double alpha = rho * std::numbers::pi / (kGamma * static_cast<double>(m));
  return BilinearNetwork(std::move(u), std::move(v), Matrix(Matrix::Constant(m, 1, alpha)));
}

BilinearNetwork sample_network(const ShapedCovariance& q, Eigen::Index m,
                               std::uint64_t seed, unsigned threads) {
  auto signs = sign_gaussian(q, m, seed, threads);
  return assemble_network(std::move(signs.u), std::move(signs.v), q.rho, m);
}

BilinearNetwork sample_vector_output(const std::vector<ShapedCovariance>& classes,
                                     Eigen::Index m, std::uint64_t seed,
                                     unsigned threads) {
  const auto c = static_cast<Eigen::Index>(classes.size());
  if (c < 1) throw InvalidInput("vector sampling needs at least one class");
  if (m < 1 || m % c != 0)
    throw InvalidInput("C = " + std::to_string(c) + " does not divide m = " +
                       std::to_string(m));
  const Eigen::Index per = m / c;
  const Eigen::Index d = classes[0].d();
  SignMatrix u(m, d), v(m, d);
  Matrix alpha = Matrix::Zero(m, c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const auto& q = classes[static_cast<std::size_t>(k)];
    if (q.d() != d) throw InvalidInput("class covariances differ in dimension");
    const std::uint64_t s = k == 0 ? seed : derive_seed(~seed, static_cast<std::uint64_t>(k));
    const auto signs = sign_gaussian(q, per, s, threads);
    u.middleRows(k * per, per) = signs.u;
    v.middleRows(k * per, per) = signs.v;
    alpha.col(k).segment(k * per, per).setConstant(
        q.rho * static_cast<double>(c) * std::numbers::pi /
        (kGamma * static_cast<double>(m)));
  }
  return BilinearNetwork(std::move(u), std::move(v), std::move(alpha));
}

long long required_m(const TheoremBound& b) {
  if (b.d < 2.0) throw InvalidInput("required_m needs d >= 2");
  if (!(b.epsilon > 0.0)) throw InvalidInput("required_m needs epsilon > 0");
  const double r2 = b.row_norm * b.row_norm;
  const double value = b.c1 * b.lipschitz * b.lipschitz * r2 * r2 * b.d *
                       std::log(b.d) / (b.epsilon * b.epsilon);
  return static_cast<long long>(std::ceil(value));
}

double moment_deviation(const SignPair& s, const ShapedCovariance& q) {
  const auto m = s.u.rows();
  if (m == 0) throw InvalidInput("no samples");
  const Matrix emp = s.u.cast<double>().transpose() * s.v.cast<double>() /
                     static_cast<double>(m);
  const Matrix expected =
      (2.0 / std::numbers::pi) * q.q12().array().max(-1.0).min(1.0).asin().matrix();
  return (emp - expected).cwiseAbs().maxCoeff();
}

}  // namespace qsdp
