#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qsdp/errors.hpp"
#include "qsdp/model.hpp"

using namespace qsdp;

namespace {

// scalar-loop oracle for sum_j sigma(x'q_j) alpha_j
double poly_oracle(const IntMatrix& q, const Vector& alpha, const Activation& act,
                   const std::vector<double>& x) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < q.rows(); ++j) {
    double t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) t += q(j, static_cast<Eigen::Index>(i)) * x[i];
    total += (act.a * t * t + act.b * t + act.c) * alpha(j);
  }
  return total;
}

double bilinear_oracle(const SignMatrix& u, const SignMatrix& v, const Vector& alpha,
                       const std::vector<double>& x) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      a += u(j, static_cast<Eigen::Index>(i)) * x[i];
      b += v(j, static_cast<Eigen::Index>(i)) * x[i];
    }
    total += a * b * alpha(j);
  }
  return total;
}

std::vector<double> random_vec(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> x(d);
  for (auto& xi : x) xi = g(rng);
  return x;
}

IntMatrix random_levels(Eigen::Index m, Eigen::Index d, int levels, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, levels);
  IntMatrix q(m, d);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < d; ++i) q(j, i) = 2 * pick(rng) - levels;
  return q;
}

}  // namespace

TEST_CASE("poly_forward on hand examples") {
  IntMatrix q(1, 2);
  q << 1, 1;
  const PolyNetwork net(q, 1, {1, 0, 0}, Vector::Ones(1));
  const std::vector<double> x{1, 2};
  CHECK(poly_forward(net, x) == 9.0);

  const PolyNetwork zero(q, 1, {1, 2, 3}, Vector::Zero(1));
  CHECK(poly_forward(zero, x) == 0.0);
}

TEST_CASE("poly_forward matches a scalar-loop oracle") {
  std::mt19937_64 rng(11);
  const Activation act{1.0, 0.1, 0.5};
  for (int trial = 0; trial < 20; ++trial) {
    const IntMatrix q = random_levels(3, 5, 4, rng);
    const Vector alpha = testing::gaussian(3, 1, rng);
    const PolyNetwork net(q, 4, act, alpha);
    const auto x = random_vec(5, rng);
    const double want = poly_oracle(q, alpha, act, x);
    CHECK(std::abs(poly_forward(net, x) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("bilinear_forward on hand examples") {
  SignMatrix u(1, 2);
  u << 1, 1;
  const BilinearNetwork net(u, u, Vector::Ones(1));
  CHECK(bilinear_forward(net, std::vector<double>{1, 2}) == 9.0);

  SignMatrix u2(2, 2), v2(2, 2);
  u2 << 1, -1, 1, -1;
  v2 << 1, 1, 1, 1;
  Vector alpha(2);
  alpha << 0.7, -0.7;
  const BilinearNetwork cancel(u2, v2, alpha);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) CHECK(bilinear_forward(cancel, random_vec(2, rng)) == 0.0);
}

TEST_CASE("bilinear_forward matches a scalar-loop oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const SignMatrix u = testing::random_signs(4, 6, rng);
    const SignMatrix v = testing::random_signs(4, 6, rng);
    const Vector alpha = testing::gaussian(4, 1, rng);
    const BilinearNetwork net(u, v, alpha);
    const auto x = random_vec(6, rng);
    const double want = bilinear_oracle(u, v, alpha, x);
    CHECK(std::abs(bilinear_forward(net, x) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("bilinear_forward is invariant under negating a neuron's pair") {
  std::mt19937_64 rng(13);
  SignMatrix u = testing::random_signs(3, 5, rng);
  SignMatrix v = testing::random_signs(3, 5, rng);
  const Vector alpha = testing::gaussian(3, 1, rng);
  const auto x = random_vec(5, rng);
  const double before = bilinear_forward(BilinearNetwork(u, v, alpha), x);
  u.row(1) *= -1;
  v.row(1) *= -1;
  CHECK(bilinear_forward(BilinearNetwork(u, v, alpha), x) ==
        doctest::Approx(before).epsilon(1e-14));
}

TEST_CASE("batch prediction equals per-row forward") {
  std::mt19937_64 rng(14);
  const SignMatrix u = testing::random_signs(7, 4, rng);
  const SignMatrix v = testing::random_signs(7, 4, rng);
  const BilinearNetwork net(u, v, Vector(testing::gaussian(7, 1, rng)));
  const Matrix x = testing::gaussian(9, 4, rng);
  const Matrix yhat = bilinear_predict(net, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector xi = x.row(i).transpose();
    CHECK(yhat(i, 0) == doctest::Approx(bilinear_forward(net, as_span(xi))).epsilon(1e-12));
  }
}

TEST_CASE("lift_input matches hand-evaluated matrices") {
  const Matrix a = lift_input(std::vector<double>{3}, 2, {1, 2, 5}).matrix();
  Matrix want_a(3, 3);
  want_a << 9, 9, 3, 9, 9, 3, 3, 3, 5;
  CHECK(a == want_a);

  const Matrix b = lift_input(std::vector<double>{1, -1}, 1, {2, 0, 1}).matrix();
  Matrix want_b(3, 3);
  want_b << 2, -2, 0, -2, 2, 0, 0, 0, 1;
  CHECK(b == want_b);

  const Matrix c = lift_input(std::vector<double>{0, 0}, 3, {1, 1, 7}).matrix();
  Matrix want_c = Matrix::Zero(7, 7);
  want_c(6, 6) = 7;
  CHECK(c == want_c);
}

TEST_CASE("lifted inputs reject asymmetric or non-finite matrices") {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = 1;
  CHECK_THROWS_AS(LiftedInput{m}, InvalidInput);
  m(0, 1) = std::nan("");
  m(1, 0) = std::nan("");
  CHECK_THROWS_AS(LiftedInput{m}, InvalidInput);
}

TEST_CASE("decompose_level uses leading plus ones") {
  CHECK(decompose_level(-4, 4) == std::vector<std::int8_t>{-1, -1, -1, -1});
  CHECK(decompose_level(0, 4) == std::vector<std::int8_t>{1, 1, -1, -1});
  CHECK(decompose_level(3, 3) == std::vector<std::int8_t>{1, 1, 1});
  for (int levels = 1; levels <= 5; ++levels)
    for (int q = -levels; q <= levels; q += 2) {
      const auto s = decompose_level(q, levels);
      int sum = 0;
      for (auto si : s) sum += si;
      CHECK(sum == q);
    }
  CHECK_THROWS_AS(decompose_level(1, 4), InvalidInput);
  CHECK_THROWS_AS(decompose_level(6, 4), InvalidInput);
}

TEST_CASE("constructors validate their invariants") {
  IntMatrix q(1, 2);
  q << 1, 2;
  CHECK_THROWS_AS(PolyNetwork(q, 3, {}, Vector::Ones(1)), InvalidInput);
  q << 1, 3;
  CHECK_NOTHROW(PolyNetwork(q, 3, {}, Vector::Ones(1)));
  CHECK_THROWS_AS(PolyNetwork(q, 3, {}, Vector::Ones(2)), InvalidInput);

  SignMatrix u(1, 2);
  u << 1, 0;
  CHECK_THROWS_AS(BilinearNetwork(u, u, Vector::Ones(1)), InvalidInput);
  u << 1, -1;
  CHECK_THROWS_AS(BilinearNetwork(u, SignMatrix(SignMatrix::Ones(2, 2)), Vector::Ones(1)),
                  InvalidInput);

  SignMatrix w(1, 2);
  w << 2, 0;
  CHECK_THROWS_AS(QuadraticNetwork(w, Vector::Ones(1)), InvalidInput);

  const BilinearNetwork ok(u, u, Vector::Ones(1));
  CHECK_THROWS_AS(bilinear_forward(ok, std::vector<double>{1, 2, 3}), InvalidInput);
  CHECK_THROWS_AS(bilinear_forward(ok, lift_input(std::vector<double>{1}, 1, {})),
                  InvalidInput);
}

TEST_CASE("multilevel_to_binary reproduces the polynomial network") {
  std::mt19937_64 rng(21);
  const Activation act{0.8, -0.3, 1.7};
  for (int levels : {1, 2, 4}) {
    const IntMatrix q = random_levels(2, 3, levels, rng);
    const PolyNetwork poly(q, levels, act, Vector(testing::gaussian(2, 1, rng)));
    const BilinearNetwork bin = multilevel_to_binary(poly);
    CHECK(bin.input_dim() == 3 * levels + 1);
    CHECK(bin.u() == bin.v());
    for (Eigen::Index j = 0; j < bin.neurons(); ++j) CHECK(bin.u()(j, bin.input_dim() - 1) == 1);
    for (int t = 0; t < 50; ++t) {
      const auto x = random_vec(3, rng);
      const double want = poly_forward(poly, x);
      const double got = bilinear_forward(bin, lift_input(x, levels, act));
      CHECK(std::abs(got - want) <= 1e-10 * (1.0 + std::abs(want)));
    }
  }
}

TEST_CASE("symmetrize_to_quadratic on the special cases") {
  SignMatrix u(1, 3);
  u << 1, -1, 1;
  const Vector alpha = Vector::Constant(1, 0.5);
  const auto same = symmetrize_to_quadratic(BilinearNetwork(u, u, alpha));
  CHECK(same.neurons() == 3);
  CHECK(same.w().row(0) == u.row(0));
  CHECK(same.alpha()(0) == 1.0);
  CHECK(same.alpha()(1) == -0.25);
  CHECK(same.alpha()(2) == -0.25);

  const SignMatrix neg = -u;
  const auto anti = symmetrize_to_quadratic(BilinearNetwork(u, neg, alpha));
  CHECK(anti.w().row(0).isZero());
  const std::vector<double> x{0.3, 1.2, -0.4};
  const double t = 0.3 - 1.2 - 0.4;
  CHECK(quadratic_forward(anti, x) == doctest::Approx(-t * t * 0.5).epsilon(1e-14));
}

TEST_CASE("symmetrize_to_quadratic is exact on random networks") {
  std::mt19937_64 rng(22);
  const BilinearNetwork net(testing::random_signs(3, 5, rng), testing::random_signs(3, 5, rng),
                            Vector(testing::gaussian(3, 1, rng)));
  const auto quad = symmetrize_to_quadratic(net);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_vec(5, rng);
    const double want = bilinear_forward(net, x);
    CHECK(std::abs(quadratic_forward(quad, x) - want) <= 1e-10 * (1.0 + std::abs(want)));
  }
  const Matrix xs = testing::gaussian(10, 5, rng);
  CHECK((quadratic_predict(quad, xs) - bilinear_predict(net, xs).col(0)).cwiseAbs().maxCoeff() <
        1e-10 * (1.0 + bilinear_predict(net, xs).cwiseAbs().maxCoeff()));
}

TEST_CASE("symmetrization of a lifted network stays exact on lifted inputs") {
  std::mt19937_64 rng(23);
  const Activation act{1.0, 0.5, -0.2};
  const PolyNetwork poly(random_levels(3, 2, 2, rng), 2, act, Vector(testing::gaussian(3, 1, rng)));
  const auto bin = multilevel_to_binary(poly);
  const auto quad = symmetrize_to_quadratic(bin);
  const auto x = random_vec(2, rng);
  const auto lifted = lift_input(x, 2, act);
  CHECK(quadratic_forward(quad, lifted) ==
        doctest::Approx(poly_forward(poly, x)).epsilon(1e-10));
}
