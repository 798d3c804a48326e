// qsdp-cli: file-based pipeline driver.
//
//   gen-data           dataset -> train.qdat, test.qdat (+ planted.qsdp)
//   train-sdp          train.qdat -> solution.json
//   shape              solution.json -> shaped.json
//   sample             shaped.json -> sampled.qsdp, sample_report.json
//   train-baseline     train.qdat -> baseline_weights.json
//   quantize-baseline  baseline_weights.json -> baseline.qsdp
//   eval               <network> + caches -> eval.json
//   convert            bilinear <network> -> quadratic.qsdp
//   experiment         full grid -> results.csv, lower_bound.json, plot CSVs

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qsdp/baseline.hpp"
#include "qsdp/errors.hpp"
#include "qsdp/experiment.hpp"
#include "qsdp/network_io.hpp"
#include "qsdp/sampler.hpp"
#include "qsdp/serialize.hpp"

namespace fs = std::filesystem;
using namespace qsdp;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string variant;
  std::optional<Eigen::Index> m;
  std::string network;
};

ExperimentSpec load_spec(const Options& o, bool required) {
  ExperimentSpec spec;
  if (o.config.empty()) {
    if (required) throw ConfigError("", "this command needs --config");
  } else {
    spec = parse_experiment(read_json(o.config));
  }
  if (!o.variant.empty()) {
    try {
      spec.variant = parse_variant(o.variant);
    } catch (const InvalidInput& e) {
      throw ConfigError("--variant", e.what());
    }
  }
  if (o.seed) spec.seeds = {*o.seed};
  if (o.threads) spec.threads = *o.threads;
  return spec;
}

fs::path artifact(const Options& o, const std::string& name, const std::string& producer) {
  const fs::path p = fs::path(o.out) / name;
  if (!fs::exists(p))
    throw IoError("missing " + p.string() + "; run `qsdp-cli " + producer + "` first");
  return p;
}

fs::path output(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

Eigen::Index grid_m(const Options& o, const ExperimentSpec& spec) {
  return o.m ? *o.m : spec.m_grid.back();
}

void gen_data(const Options& o) {
  const auto spec = load_spec(o, true);
  const auto data = load_data(spec.dataset);
  save_dataset(output(o, "train.qdat"), data.split.train);
  save_dataset(output(o, "test.qdat"), data.split.test);
  if (data.planted) save_network(output(o, "planted.qsdp"), *data.planted);
  std::cout << "train " << data.split.train.n() << " x " << data.split.train.d() << ", test "
            << data.split.test.n() << " -> " << o.out << '\n';
}

void train_sdp(const Options& o) {
  const auto spec = load_spec(o, false);
  const Dataset train = load_dataset(artifact(o, "train.qdat", "gen-data"));
  SdpProblem problem{spec.variant, train.x, train.y, spec.loss, spec.beta, spec.solver};
  const auto sol = solve_sdp(problem);
  write_json(output(o, "solution.json"), to_json(sol));
  std::cout << "d_SDP " << sol.objective << " after " << sol.iterations << " iterations\n";
}

void shape(const Options& o) {
  const auto spec = load_spec(o, false);
  const auto sol = solution_from_json(read_json(artifact(o, "solution.json", "train-sdp")));
  if (sol.variant == SdpVariant::quadratic)
    throw InvalidInput("quadratic solutions give a lower bound only; nothing to shape");
  const auto shaped = shape_solution(sol, spec.shaping);
  write_json(output(o, "shaped.json"), to_json(shaped));
  std::cout << "shaped " << shaped.size() << " block(s)\n";
}

void sample(const Options& o) {
  const auto spec = load_spec(o, false);
  const auto shaped = shaped_from_json(read_json(artifact(o, "shaped.json", "shape")));
  const std::uint64_t seed = spec.seeds.front();
  Eigen::Index m = grid_m(o, spec);
  const unsigned threads = spec.threads;
  BilinearNetwork net = [&] {
    if (shaped.size() == 1) return sample_network(shaped[0], m, seed, threads);
    const auto c = static_cast<Eigen::Index>(shaped.size());
    m = ((m + c - 1) / c) * c;
    return sample_vector_output(shaped, m, seed, threads);
  }();
  save_network(output(o, "sampled.qsdp"), net);

  Json classes = Json::array();
  const Eigen::Index per = m / static_cast<Eigen::Index>(shaped.size());
  for (std::size_t k = 0; k < shaped.size(); ++k) {
    const auto first = static_cast<Eigen::Index>(k) * per;
    const SignPair block{net.u().middleRows(first, per), net.v().middleRows(first, per)};
    classes.push_back(
        {{"rho", shaped[k].rho}, {"moment_deviation", moment_deviation(block, shaped[k])}});
  }
  write_json(output(o, "sample_report.json"),
             {{"seed", seed}, {"m", m}, {"threads", threads}, {"classes", classes}});
  std::cout << "sampled m=" << m << " seed=" << seed << '\n';
}

void train_baseline(const Options& o) {
  const auto spec = load_spec(o, false);
  const Dataset train = load_dataset(artifact(o, "train.qdat", "gen-data"));
  TrainConfig cfg = spec.baseline_config;
  cfg.m = grid_m(o, spec);
  cfg.seed = spec.seeds.front();
  const auto trained = sgd_train_bilinear(train.x, train.y, cfg);
  write_json(output(o, "baseline_weights.json"), to_json(trained));
  std::cout << "trained m=" << cfg.m << " final loss " << trained.curve.back().loss << '\n';
}

void quantize_baseline(const Options& o) {
  const auto spec = load_spec(o, false);
  const auto trained = train_result_from_json(
      read_json(artifact(o, "baseline_weights.json", "train-baseline")));
  if (trained.alpha.cols() != 1)
    throw InvalidInput("baseline quantization supports scalar outputs only");
  const auto net =
      post_training_quantize(trained.u, trained.v, trained.alpha.col(0), spec.paper_formula);
  save_network(output(o, "baseline.qsdp"), net);
  std::cout << "quantized m=" << net.neurons() << '\n';
}

fs::path network_path(const Options& o, const std::string& fallback, const std::string& producer) {
  if (o.network.empty()) return artifact(o, fallback, producer);
  if (!fs::exists(o.network)) throw IoError("missing network file " + o.network);
  return o.network;
}

void eval(const Options& o) {
  const auto spec = load_spec(o, false);
  const Network net = load_network(network_path(o, "sampled.qsdp", "sample"));
  const Dataset train = load_dataset(artifact(o, "train.qdat", "gen-data"));
  Json j = {{"train", to_json(evaluate(net, train.x, train.y, spec.loss, spec.beta))}};
  const fs::path test_path = fs::path(o.out) / "test.qdat";
  if (fs::exists(test_path)) {
    const Dataset test = load_dataset(test_path);
    if (test.n() > 0) j["test"] = to_json(evaluate(net, test.x, test.y, spec.loss, spec.beta));
  }
  write_json(output(o, "eval.json"), j);
  std::cout << j.dump(2) << '\n';
}

void convert(const Options& o) {
  const Network net = load_network(network_path(o, "sampled.qsdp", "sample"));
  const auto* bilinear = std::get_if<BilinearNetwork>(&net);
  if (!bilinear) throw InvalidInput("convert expects a bilinear network file");
  const auto quad = symmetrize_to_quadratic(*bilinear);
  save_network(output(o, "quadratic.qsdp"), quad);
  std::cout << "quadratic network with " << quad.neurons() << " neurons\n";
}

void experiment(const Options& o) {
  const auto spec = load_spec(o, true);
  const auto res = run_experiment(spec, o.out);
  std::cout << "d_SDP " << res.lower_bound << ", " << res.rows.size() << " grid points -> "
            << o.out << '\n';
}

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const InvalidInput& err) {
    std::cerr << "invalid input: " << err.what() << '\n';
    return 2;
  } catch (const ConvergenceError& err) {
    std::cerr << "solver did not converge: " << err.what() << " (primal "
              << err.primal_residual() << ", dual " << err.dual_residual() << ")\n";
    return 3;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "i/o error: " << err.what() << '\n';
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized two-layer networks via semidefinite lower bounds"};
  app.require_subcommand(1);
  Options o;

  auto add = [&](const std::string& name, const std::string& help, void (*fn)(const Options&)) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", o.config, "JSON config")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "artifact directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "sampling / training seed");
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--variant", o.variant, "bilinear, quadratic or vector")
        ->check(CLI::IsMember({"bilinear", "quadratic", "vector"}));
    cmd->callback([fn, &o] { fn(o); });
    return cmd;
  };

  add("gen-data", "generate or load a dataset and write binary caches", gen_data);
  add("train-sdp", "solve the SDP on train.qdat", train_sdp);
  add("shape", "shape solution.json into Gaussian covariances", shape);
  add("sample", "sample a quantized network from shaped.json", sample)
      ->add_option("--m", o.m, "number of neurons (default: largest of m_grid)")
      ->check(CLI::PositiveNumber);
  add("train-baseline", "train the full-precision backprop baseline", train_baseline)
      ->add_option("--m", o.m, "number of neurons (default: largest of m_grid)")
      ->check(CLI::PositiveNumber);
  add("quantize-baseline", "quantize baseline_weights.json", quantize_baseline);
  add("eval", "evaluate a network on the cached data", eval)
      ->add_option("--network", o.network, "network file (default: sampled.qsdp)");
  add("convert", "rewrite a bilinear network as a quadratic one", convert)
      ->add_option("--network", o.network, "network file (default: sampled.qsdp)");
  add("experiment", "run the full grid and write result CSVs", experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return 0;
}
