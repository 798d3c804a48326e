#include "qsdp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "qsdp/sampler.hpp"

namespace qsdp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

struct Task {
  bool baseline;
  Eigen::Index m;
  std::uint64_t seed;
};

}  // namespace

ExperimentSpec parse_experiment(const Json& j) {
  ConfigReader r(j);
  ExperimentSpec s;
  const int version = r.get("version", kConfigVersion);
  if (version != kConfigVersion)
    throw ConfigError("/version", "unsupported config version " + std::to_string(version));
  s.dataset = parse_dataset(r.child("dataset"));
  try {
    s.variant = parse_variant(r.get<std::string>("variant", "bilinear"));
  } catch (const InvalidInput& e) {
    throw ConfigError("/variant", e.what());
  }
  s.beta = r.get("beta", s.beta);
  if (!(s.beta >= 0.0)) throw ConfigError("/beta", "must be >= 0");
  try {
    s.loss = parse_loss(r.get<std::string>("loss", "squared"));
  } catch (const InvalidInput& e) {
    throw ConfigError("/loss", e.what());
  }
  s.m_grid = r.get("m_grid", s.m_grid);
  if (s.m_grid.empty()) throw ConfigError("/m_grid", "must be nonempty");
  for (std::size_t i = 0; i < s.m_grid.size(); ++i) {
    if (s.m_grid[i] < 1) throw ConfigError("/m_grid/" + std::to_string(i), "must be >= 1");
    if (i > 0 && s.m_grid[i] <= s.m_grid[i - 1])
      throw ConfigError("/m_grid/" + std::to_string(i), "grid must be strictly ascending");
  }
  s.seeds = r.get("seeds", s.seeds);
  if (s.seeds.empty()) throw ConfigError("/seeds", "must be nonempty");
  const auto shaping = r.get<std::string>("shaping", "krivine");
  if (shaping == "krivine") s.shaping = ShapingMethod::krivine;
  else if (shaping == "numeric") s.shaping = ShapingMethod::numeric;
  else throw ConfigError("/shaping", "expected 'krivine' or 'numeric'");
  if (r.has("baseline")) {
    auto b = r.child("baseline");
    s.baseline = b.get("enabled", true);
    s.paper_formula = b.get("paper_formula", false);
    if (b.has("train")) s.baseline_config = parse_train(b.child("train"));
    b.finish();
  } else {
    s.baseline = false;
  }
  s.baseline_config.loss = s.loss;
  if (r.has("solver")) s.solver = parse_solver(r.child("solver"));
  const int threads = r.get("threads", 1);
  if (threads < 1) throw ConfigError("/threads", "must be >= 1");
  s.threads = static_cast<unsigned>(threads);
  r.finish();
  return s;
}

std::vector<ShapedCovariance> shape_solution(const SdpSolution& sol, ShapingMethod method) {
  std::vector<ShapedCovariance> out;
  for (std::size_t k = 0; k < sol.blocks.size(); ++k) {
    const auto scaled = scale_solution(sol, k);
    out.push_back(method == ShapingMethod::krivine
                      ? krivine_shape(scaled)
                      : numeric_shape(scaled.z, {}, scaled.rho));
  }
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "method,m,seed,train_objective,test_objective,train_loss,test_loss,"
        "train_accuracy,test_accuracy,stage_seconds,eval_seconds\n";
  for (const auto& r : rows)
    os << r.method << ',' << r.m << ',' << r.seed << ',' << fmt(r.train.objective) << ','
       << fmt(r.test.objective) << ',' << fmt(r.train.loss) << ',' << fmt(r.test.loss) << ','
       << fmt(r.train.accuracy) << ',' << fmt(r.test.accuracy) << ','
       << fmt(r.stage_seconds) << ',' << fmt(r.eval_seconds) << '\n';
  return os.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::filesystem::path& out_dir) {
  const LoadedData data = load_data(spec.dataset);
  const Dataset& train = data.split.train;
  const Dataset& test = data.split.test;
  const bool has_test = test.n() > 0;

  ExperimentResult res;
  SdpProblem problem{spec.variant, train.x, train.y, spec.loss, spec.beta, spec.solver};
  auto t0 = Clock::now();
  res.solution = solve_sdp(problem);
  res.solve_seconds = seconds_since(t0);
  res.lower_bound = lower_bound(res.solution);
  res.zero_loss = loss_value(spec.loss, Matrix::Zero(train.n(), train.outputs()), train.y);
  res.sdp_train_accuracy = accuracy(res.solution.predictions, train.y);
  if (has_test)
    res.sdp_test_accuracy = accuracy(sdp_predictions(res.solution, test.x), test.y);

  const bool samples = spec.variant != SdpVariant::quadratic;
  std::vector<ShapedCovariance> shaped;
  if (samples) {
    t0 = Clock::now();
    shaped = shape_solution(res.solution, spec.shaping);
    res.shape_seconds = seconds_since(t0);
  }
  const bool baseline = spec.baseline && train.outputs() == 1;

  std::vector<Task> tasks;
  for (auto m : spec.m_grid)
    for (auto seed : spec.seeds) {
      if (samples) tasks.push_back({false, m, seed});
      if (baseline) tasks.push_back({true, m, seed});
    }

  auto run_task = [&](const Task& t) {
    ResultRow row;
    row.m = t.m;
    row.seed = t.seed;
    auto start = Clock::now();
    std::optional<BilinearNetwork> net;
    if (t.baseline) {
      row.method = "baseline_quantized";
      TrainConfig cfg = spec.baseline_config;
      cfg.m = t.m;
      cfg.seed = t.seed;
      const auto trained = sgd_train_bilinear(train.x, train.y, cfg);
      row.curve = trained.curve;
      net = post_training_quantize(trained.u, trained.v, trained.alpha.col(0),
                                   spec.paper_formula);
    } else {
      row.method = "sdp_sampled";
      const auto c = static_cast<Eigen::Index>(shaped.size());
      const Eigen::Index m = spec.variant == SdpVariant::vector_output
                                 ? ((t.m + c - 1) / c) * c
                                 : t.m;
      net = spec.variant == SdpVariant::vector_output
                ? sample_vector_output(shaped, m, t.seed)
                : sample_network(shaped[0], m, t.seed);
    }
    row.stage_seconds = seconds_since(start);
    start = Clock::now();
    const Network network = *net;
    row.train = evaluate(network, train.x, train.y, spec.loss, spec.beta);
    if (has_test) row.test = evaluate(network, test.x, test.y, spec.loss, spec.beta);
    else row.test.objective = row.test.loss = row.test.regularizer = std::nan("");
    row.eval_seconds = seconds_since(start);
    if (!out_dir.empty()) {
      Json point = {{"method", row.method},         {"m", row.m},
                    {"seed", row.seed},             {"train", to_json(row.train)},
                    {"test", to_json(row.test)},    {"stage_seconds", row.stage_seconds},
                    {"eval_seconds", row.eval_seconds}};
      const std::string name = row.method + "_m" + std::to_string(row.m) + "_s" +
                               std::to_string(row.seed) + ".json";
      write_json(out_dir / "points" / name, point);
    }
    return row;
  };

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir / "points");
  res.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        res.rows[i] = run_task(tasks[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(spec.threads,
                                                           static_cast<unsigned>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(res.rows.begin(), res.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.method, a.m, a.seed) < std::tie(b.method, b.m, b.seed);
  });

  if (out_dir.empty()) return res;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "results.csv", results_csv(res.rows));

  Json lb = {{"lower_bound", res.lower_bound},
             {"variant", std::string(to_string(spec.variant))},
             {"loss", std::string(to_string(spec.loss))},
             {"beta", spec.beta},
             {"rho", res.solution.rho},
             {"iterations", res.solution.iterations},
             {"primal_residual", res.solution.primal_residual},
             {"dual_residual", res.solution.dual_residual},
             {"solve_seconds", res.solve_seconds},
             {"shape_seconds", res.shape_seconds},
             {"zero_network_loss", res.zero_loss},
             {"n_train", train.n()},
             {"n_test", test.n()},
             {"d", train.d()},
             {"row_norm", train.row_norm}};
  lb["sdp_train_accuracy"] = res.sdp_train_accuracy ? Json(*res.sdp_train_accuracy) : Json(nullptr);
  lb["sdp_test_accuracy"] = res.sdp_test_accuracy ? Json(*res.sdp_test_accuracy) : Json(nullptr);
  write_json(out_dir / "lower_bound.json", lb);

  std::map<std::pair<std::string, Eigen::Index>, std::vector<const ResultRow*>> groups;
  for (const auto& r : res.rows) groups[{r.method, r.m}].push_back(&r);
  std::ostringstream obj;
  obj << "method,m,median_train_objective,median_test_objective,lower_bound,zero_network_loss\n";
  for (const auto& [key, rows] : groups) {
    std::vector<double> tr, te;
    for (const auto* r : rows) {
      tr.push_back(r->train.objective);
      te.push_back(r->test.objective);
    }
    obj << key.first << ',' << key.second << ',' << fmt(median(tr)) << ','
        << fmt(has_test ? median(te) : std::nan("")) << ',' << fmt(res.lower_bound) << ','
        << fmt(res.zero_loss) << '\n';
  }
  write_text(out_dir / "objective_vs_m.csv", obj.str());

  std::ostringstream acc;
  acc << "method,m,seed,seconds,train_accuracy,test_accuracy\n";
  for (const auto& r : res.rows) {
    const double secs = r.stage_seconds + (r.method == "sdp_sampled"
                                               ? res.solve_seconds + res.shape_seconds
                                               : 0.0);
    acc << r.method << ',' << r.m << ',' << r.seed << ',' << fmt(secs) << ','
        << fmt(r.train.accuracy) << ',' << fmt(r.test.accuracy) << '\n';
  }
  write_text(out_dir / "accuracy_vs_time.csv", acc.str());

  std::ostringstream curves;
  curves << "m,seed,epoch,seconds,loss,accuracy\n";
  for (const auto& r : res.rows)
    for (const auto& p : r.curve)
      curves << r.m << ',' << r.seed << ',' << p.epoch << ',' << fmt(p.seconds) << ','
             << fmt(p.loss) << ',' << fmt(p.accuracy) << '\n';
  write_text(out_dir / "baseline_curves.csv", curves.str());
  return res;
}

}  // namespace qsdp
