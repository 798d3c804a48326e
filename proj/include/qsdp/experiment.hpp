#pragma once

// End-to-end experiment: one SDP solve, then for every (m, seed) a sampled
// quantized network and, optionally, a quantized backprop baseline.

#include <filesystem>
#include <string>
#include <vector>

#include "qsdp/config.hpp"

namespace qsdp {

enum class ShapingMethod { krivine, numeric };

struct ExperimentSpec {
  DatasetSpec dataset{};
  SdpVariant variant = SdpVariant::bilinear;
  double beta = 1e-4;
  LossKind loss = LossKind::squared;
  std::vector<Eigen::Index> m_grid{10, 100, 1000};
  std::vector<std::uint64_t> seeds{0};
  ShapingMethod shaping = ShapingMethod::krivine;
  bool baseline = true;
  TrainConfig baseline_config{};  ///< m and seed come from the grid
  bool paper_formula = false;
  SolverConfig solver{};
  unsigned threads = 1;
};

ExperimentSpec parse_experiment(const Json& j);

struct ResultRow {
  std::string method;
  Eigen::Index m = 0;
  std::uint64_t seed = 0;
  Metrics train, test;
  double stage_seconds = 0.0;  ///< sampling, or training plus quantization
  double eval_seconds = 0.0;
  std::vector<CurvePoint> curve;  ///< baseline only
};

struct ExperimentResult {
  SdpSolution solution;
  double lower_bound = 0.0;
  double solve_seconds = 0.0;
  double shape_seconds = 0.0;
  double zero_loss = 0.0;  ///< training loss of the zero network
  std::optional<double> sdp_train_accuracy, sdp_test_accuracy;
  std::vector<ResultRow> rows;  ///< sorted by (method, m, seed)
};

/// Runs the grid; writes results.csv, lower_bound.json and the plot CSVs
/// into `out_dir` unless it is empty.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const std::filesystem::path& out_dir = {});

/// Shaped covariances for every bilinear block of a solution.
std::vector<ShapedCovariance> shape_solution(const SdpSolution& solution,
                                             ShapingMethod method);

std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace qsdp
