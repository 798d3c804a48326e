// Acceptance harness: one PASS/FAIL line per criterion.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "qsdp/baseline.hpp"
#include "qsdp/experiment.hpp"
#include "qsdp/linalg.hpp"
#include "qsdp/network_io.hpp"
#include "qsdp/sampler.hpp"
#include "qsdp/shaping.hpp"

using namespace qsdp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<double> random_vec(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> x(static_cast<std::size_t>(d));
  for (auto& v : x) v = g(rng);
  return x;
}

Outcome shaping_exactness() {
  std::mt19937_64 rng(101);
  const Eigen::Index dims[] = {3, 10, 35};
  double diag = 0.0, eig = 0.0, arc = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index d = dims[t % 3];
    const Matrix c = testing::random_correlation(2 * d, t % 2 ? 2 : 2 * d, rng);
    const Matrix z = c.topRightCorner(d, d);
    const auto q = krivine_shape(c.topLeftCorner(d, d), z, c.bottomRightCorner(d, d));
    diag = std::max(diag, (q.q.diagonal().array() - 1.0).abs().maxCoeff());
    eig = std::min(eig, min_eigenvalue(q.q));
    arc = std::max(arc, (q.q12().array().asin().matrix() - q.gamma * z).cwiseAbs().maxCoeff());
  }
  return {diag <= 1e-12 && eig >= -1e-8 && arc <= 1e-9,
          fmt("diag err %.1e, min eig %.1e, arcsin err %.1e", diag, eig, arc)};
}

Outcome grothendieck_identity() {
  std::mt19937_64 rng(202);
  const Eigen::Index d = 10;
  const Matrix c = testing::random_correlation(2 * d, 2 * d, rng);
  const auto q = krivine_shape(c.topLeftCorner(d, d), c.topRightCorner(d, d),
                               c.bottomRightCorner(d, d), 1.0);
  const double dev = moment_deviation(sign_gaussian(q, 200000, 2024), q);
  return {dev <= 0.02, fmt("max deviation %.4f (m = 2e5)", dev)};
}

Outcome reduction_exactness() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  double poly_err = 0.0, quad_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int levels = std::array{1, 2, 4}[static_cast<std::size_t>(t % 3)];
    const Eigen::Index m = 1 + t % 6, d = 2 + t % 5;
    std::uniform_int_distribution<int> pick(0, levels);
    IntMatrix w(m, d);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < d; ++i) w(j, i) = 2 * pick(rng) - levels;
    const Activation act{coef(rng), coef(rng), coef(rng)};
    const PolyNetwork poly(w, levels, act, Vector(testing::gaussian(m, 1, rng)));
    const auto x = random_vec(d, rng);
    const double want = poly_forward(poly, x);
    const auto lifted = lift_input(x, levels, act);
    const auto bin = multilevel_to_binary(poly);
    poly_err = std::max(poly_err, rel(bilinear_forward(bin, lifted), want));

    const BilinearNetwork net(testing::random_signs(m, d, rng), testing::random_signs(m, d, rng),
                              Vector(testing::gaussian(m, 1, rng)));
    const auto quad = symmetrize_to_quadratic(net);
    quad_err = std::max(quad_err, rel(quadratic_forward(quad, x), bilinear_forward(net, x)));
    quad_err = std::max(quad_err, rel(quadratic_forward(symmetrize_to_quadratic(bin), lifted), want));
  }
  return {poly_err <= 1e-10 && quad_err <= 1e-10,
          fmt("poly->lifted %.1e, bilinear->quadratic %.1e", poly_err, quad_err)};
}

Outcome lower_bound_vs_oracle() {
  double worst = -1e300;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(400 + seed);
    SdpProblem p;
    p.x = testing::gaussian(20, 4, rng);
    p.y = testing::gaussian(20, 1, rng);
    p.beta = 1e-3;
    p.loss = LossKind::squared;
    const double d_sdp = solve_sdp(p).objective;
    const double p_star = dictionary_oracle(p.x, p.y, p.beta, p.loss).objective;
    worst = std::max(worst, (d_sdp - p_star) / (1.0 + std::abs(d_sdp)));
  }
  return {worst <= 1e-6, fmt("max (d_SDP - p*) / (1 + |d_SDP|) = %.2e", worst)};
}

Outcome solver_convergence() {
  int total = 0, ok = 0;
  double worst_res = 0.0;
  long worst_it = 0;
  std::uint64_t seed = 500;
  for (auto [n, d] : {std::pair<Eigen::Index, Eigen::Index>{50, 5}, {200, 20}, {700, 40}})
    for (auto variant : {SdpVariant::bilinear, SdpVariant::quadratic, SdpVariant::vector_output})
      for (auto loss : {LossKind::squared, LossKind::absolute, LossKind::hinge}) {
        std::mt19937_64 rng(seed++);
        SdpProblem p;
        p.variant = variant;
        p.loss = loss;
        p.beta = 1e-3;
        p.x = testing::gaussian(n, d, rng);
        p.y = testing::gaussian(n, variant == SdpVariant::vector_output ? 3 : 1, rng);
        if (loss == LossKind::hinge)
          p.y = p.y.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
        p.config.allow_unconverged = true;
        const auto s = solve_sdp(p);
        ++total;
        const double res = std::max(s.primal_residual, s.dual_residual);
        worst_res = std::max(worst_res, res);
        worst_it = std::max(worst_it, s.iterations);
        if (s.converged && res <= 1e-6 && s.iterations <= 100000 && check_invariants(s).ok) ++ok;
      }
  return {ok == total, fmt("%.0f/%.0f converged, worst residual %.2e, max iterations %.0f", ok,
                           total, worst_res, static_cast<double>(worst_it))};
}

// Planted instance shared by the objective-vs-m and rate criteria.
struct PlantedRun {
  double lower_bound = 0.0, zero_loss = 0.0;
  std::vector<Eigen::Index> m_grid;
  std::map<Eigen::Index, std::vector<double>> sampled, baseline;
};

PlantedRun run_planted() {
  ExperimentSpec s;
  s.dataset.planted = {100, 20, 10, 7, SecondLayer::nonnegative, 0.0};
  s.beta = 1e-4;
  s.loss = LossKind::absolute;
  s.m_grid = {10, 100, 1000, 10000};
  s.seeds = {0, 1, 2, 3, 4};
  s.baseline = true;
  s.baseline_config.learning_rate = 3e-4;
  s.baseline_config.scale_lr_with_m = true;
  s.baseline_config.epochs = 200;
  const auto r = run_experiment(s);
  PlantedRun f;
  f.lower_bound = r.lower_bound;
  f.zero_loss = r.zero_loss;
  f.m_grid = s.m_grid;
  for (const auto& row : r.rows)
    (row.method == "sdp_sampled" ? f.sampled : f.baseline)[row.m].push_back(row.train.objective);
  return f;
}

Outcome planted_shape(const PlantedRun& f) {
  bool monotone = true;
  double prev = 1e300;
  std::ostringstream medians;
  for (auto m : f.m_grid) {
    const double med = median(f.sampled.at(m));
    monotone = monotone && med <= prev;
    prev = med;
    medians << ' ' << m << ':' << med;
  }
  const double gap = (prev - f.lower_bound) / (f.zero_loss - f.lower_bound);
  const auto& sdp = f.sampled.at(f.m_grid.back());
  const auto& bp = f.baseline.at(f.m_grid.back());
  int wins = 0;
  for (std::size_t i = 0; i < sdp.size(); ++i) wins += sdp[i] < bp[i];
  return {monotone && gap <= 0.10 && wins >= 4,
          "medians" + medians.str() + fmt("; d_SDP %.3g, gap %.1f%%, wins %.0f/5", f.lower_bound,
                                          100.0 * gap, wins)};
}

Outcome rate_slope(const PlantedRun& f) {
  std::vector<double> lx, ly;
  for (auto m : f.m_grid) {
    lx.push_back(std::log(static_cast<double>(m)));
    ly.push_back(std::log(median(f.sampled.at(m)) - f.lower_bound));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope >= -0.8 && slope <= -0.3, fmt("log-log slope %.3f", slope)};
}

template <typename F>
Matrix central_difference(Matrix p, F&& f, double h = 1e-5) {
  Matrix g(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p(i);
    p(i) = keep + h;
    const double up = f(p);
    p(i) = keep - h;
    const double down = f(p);
    p(i) = keep;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double rel_err(const Matrix& a, const Matrix& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

Outcome gradient_check() {
  std::mt19937_64 rng(808);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 5 + t % 4, d = 2 + t % 3, m = 1 + t % 5, c = 1 + t % 3;
    const Matrix x = testing::gaussian(n, d, rng), y = testing::gaussian(n, c, rng);
    const Matrix u = testing::gaussian(m, d, rng), v = testing::gaussian(m, d, rng);
    const Matrix a = testing::gaussian(m, c, rng);
    auto loss = [&](const Matrix& uu, const Matrix& vv, const Matrix& aa) {
      return bilinear_loss_gradient(x, y, uu, vv, aa, LossKind::squared).loss;
    };
    const auto g = bilinear_loss_gradient(x, y, u, v, a, LossKind::squared);
    worst = std::max(worst, rel_err(g.u, central_difference(u, [&](const Matrix& p) { return loss(p, v, a); })));
    worst = std::max(worst, rel_err(g.v, central_difference(v, [&](const Matrix& p) { return loss(u, p, a); })));
    worst = std::max(worst, rel_err(g.alpha, central_difference(a, [&](const Matrix& p) { return loss(u, v, p); })));
  }
  return {worst <= 1e-5, fmt("max relative error %.2e", worst)};
}

Outcome quantization_stationarity() {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    std::mt19937_64 rng(900 + t);
    const Matrix x = testing::gaussian(30, 4, rng), y = testing::gaussian(30, 1, rng);
    TrainConfig cfg;
    cfg.m = 8;
    cfg.epochs = 20;
    cfg.learning_rate = 1e-2;
    cfg.seed = t;
    const auto trained = sgd_train_bilinear(x, y, cfg);
    const auto net = post_training_quantize(trained.u, trained.v, trained.alpha.col(0));
    const Matrix zhat = net.u().cast<double>().transpose() * net.v().cast<double>();
    const Matrix zstar =
        trained.u.transpose() * trained.alpha.col(0).asDiagonal() * trained.v;
    const double c = net.alpha()(0, 0);
    worst = std::max(worst, std::abs(2.0 * ((c * zhat - zstar).array() * zhat.array()).sum()));
  }
  return {worst <= 1e-10, fmt("max |d/dc| = %.2e", worst)};
}

Outcome serialization() {
  std::mt19937_64 rng(1010);
  bool identical = true, sized = true;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index m = 1 + t * 3, d = 1 + (t * 7) % 23;
    const BilinearNetwork uniform(testing::random_signs(m, d, rng),
                                  testing::random_signs(m, d, rng),
                                  Vector(Vector::Constant(m, 0.5 / static_cast<double>(m))));
    const BilinearNetwork general(testing::random_signs(m, d, rng),
                                  testing::random_signs(m, d, rng),
                                  Matrix(testing::gaussian(m, 1 + t % 3, rng)));
    const auto quad = symmetrize_to_quadratic(general.outputs() == 1 ? general : uniform);
    for (const Network& net : {Network(uniform), Network(general), Network(quad)}) {
      const auto bytes = encode_network(net);
      identical = identical && encode_network(decode_network(bytes)) == bytes;
    }
    const auto back = std::get<BilinearNetwork>(decode_network(encode_network(general)));
    identical = identical && back.u() == general.u() && back.v() == general.v() &&
                back.alpha() == general.alpha();
    const auto plane = static_cast<std::size_t>((m * d + 7) / 8);
    sized = sized && encode_network(uniform).size() == kNetworkHeaderBytes + 2 * plane + 8;
  }
  return {identical && sized,
          std::string(identical ? "round trips bitwise identical" : "round trip mismatch") +
              (sized ? ", uniform payload 2*ceil(md/8) + 8 bytes" : ", payload size mismatch")};
}

Outcome vector_consistency() {
  // C = 1: vector pipeline against the scalar one
  std::mt19937_64 rng(1111);
  SdpProblem p;
  p.x = testing::gaussian(60, 6, rng);
  p.y = testing::gaussian(60, 1, rng);
  p.beta = 1e-3;
  const auto scalar = solve_sdp(p);
  p.variant = SdpVariant::vector_output;
  const auto vec = solve_sdp(p);
  const double sdp_diff = std::abs(scalar.objective - vec.objective);
  const auto net_s = sample_network(shape_solution(scalar, ShapingMethod::krivine)[0], 500, 3);
  const auto net_v = sample_vector_output(shape_solution(vec, ShapingMethod::krivine), 500, 3);
  const double net_diff = std::abs(evaluate(net_s, p.x, p.y, p.loss, p.beta).objective -
                                   evaluate(net_v, p.x, p.y, p.loss, p.beta).objective);

  // C = 4: synthetic multiclass labels from four planted bilinear teachers
  const Eigen::Index n = 676, d = 18, classes = 4, m = 4000;
  const Matrix x = testing::gaussian(n, d, rng);
  Matrix scores(n, classes);
  for (Eigen::Index k = 0; k < classes; ++k) {
    const BilinearNetwork teacher(testing::random_signs(5, d, rng), testing::random_signs(5, d, rng),
                                  Vector(Vector::Ones(5)));
    scores.col(k) = bilinear_predict(teacher, x).col(0);
  }
  Matrix y = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    scores.row(i).maxCoeff(&k);
    y(i, k) = 1.0;
  }
  SdpProblem mc;
  mc.variant = SdpVariant::vector_output;
  mc.x = x;
  mc.y = y;
  mc.beta = 1.0;
  const auto sol = solve_sdp(mc);
  const double sdp_acc = *accuracy(sol.predictions, y);
  const auto shaped = shape_solution(sol, ShapingMethod::krivine);
  std::vector<double> accs;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    accs.push_back(*accuracy(bilinear_predict(sample_vector_output(shaped, m, seed), x), y));
  const double sampled_acc = median(accs);
  const double gap = 100.0 * std::abs(sampled_acc - sdp_acc);
  return {sdp_diff <= 1e-6 && net_diff <= 1e-6 && gap <= 5.0,
          fmt("C=1 |d_SDP diff| %.1e, |sampled diff| %.1e; C=4 SDP acc %.1f%%, ", sdp_diff,
              net_diff, 100.0 * sdp_acc) +
              fmt("sampled acc %.1f%% (gap %.2f points)", 100.0 * sampled_acc, gap)};
}

bool report(int id, const char* name, double limit_seconds, const std::function<Outcome()>& f) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_seconds <= 0.0 || secs <= limit_seconds;
  const bool pass = o.pass && in_time;
  std::printf("%s [%2d] %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs, in_time ? "" : ", over time limit");
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main() {
  int failed = 0;
  failed += !report(1, "shaping exactness", 10, shaping_exactness);
  failed += !report(2, "Grothendieck identity", 30, grothendieck_identity);
  failed += !report(3, "reduction exactness", 5, reduction_exactness);
  failed += !report(4, "lower bound vs dictionary oracle", 120, lower_bound_vs_oracle);
  failed += !report(5, "solver convergence", 0, solver_convergence);

  PlantedRun planted;
  std::string planted_error;
  const auto start = std::chrono::steady_clock::now();
  try {
    planted = run_planted();
  } catch (const std::exception& e) {
    planted_error = e.what();
  }
  const double planted_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  failed += !report(6, "planted objective vs m", 0, [&]() -> Outcome {
    if (!planted_error.empty()) return {false, "threw: " + planted_error};
    auto o = planted_shape(planted);
    if (planted_secs > 900.0) o.pass = false;
    o.detail += fmt("; experiment %.0f s", planted_secs);
    return o;
  });
  failed += !report(7, "sampling rate slope", 0, [&]() -> Outcome {
    if (!planted_error.empty()) return {false, "threw: " + planted_error};
    return rate_slope(planted);
  });

  failed += !report(8, "baseline gradients", 0, gradient_check);
  failed += !report(9, "quantization scalar stationarity", 0, quantization_stationarity);
  failed += !report(10, "serialization", 0, serialization);
  failed += !report(11, "vector-output consistency", 0, vector_consistency);
  std::printf("%d/11 criteria passed\n", 11 - failed);
  return failed == 0 ? 0 : 1;
}
