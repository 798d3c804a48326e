#pragma once

// JSON envelopes for solver output, shaped covariances and reports.
// Matrices are arrays of rows; doubles round-trip exactly.

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "qsdp/baseline.hpp"
#include "qsdp/sdp.hpp"
#include "qsdp/shaping.hpp"

namespace qsdp {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const SolverConfig& config);
Json to_json(const SdpSolution& solution);
SdpSolution solution_from_json(const Json& j);

/// {"format": "qsdp-shaped", "classes": [{"gamma", "rho", "q"}, ...]}
Json to_json(const std::vector<ShapedCovariance>& shaped);
std::vector<ShapedCovariance> shaped_from_json(const Json& j);

Json to_json(const Metrics& metrics);

/// Real-valued baseline weights before quantization.
Json to_json(const TrainResult& trained);
TrainResult train_result_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qsdp
