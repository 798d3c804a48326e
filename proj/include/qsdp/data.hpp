#pragma once

// Datasets: planted generation, CSV ingestion with an explicit schema,
// seeded splits, normalization and the binary QDAT cache.
//
// QDAT layout: magic "QDAT", u16 version, u32 n, u32 d, u32 C, then X and y
// as row-major little-endian f64.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsdp/model.hpp"
#include "qsdp/types.hpp"

namespace qsdp {

struct Dataset {
  Matrix x;  ///< n x d
  Matrix y;  ///< n x 1, or n x C one-hot for multiclass
  std::string name;
  std::string split = "train";
  std::string provenance;
  double row_norm = 0.0;  ///< R_m = max_i ||x_i||

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }
  Eigen::Index outputs() const { return y.cols(); }
  /// Targets are all +-1 (scalar) or one-hot rows (vector).
  bool is_classification() const;
};

void validate(const Dataset& data);
double max_row_norm(const Matrix& x);

enum class SecondLayer { nonnegative, free };

struct PlantedConfig {
  Eigen::Index n = 100;
  Eigen::Index d = 20;
  Eigen::Index planted_m = 10;  ///< 0 plants the zero network
  std::uint64_t seed = 0;
  SecondLayer second_layer = SecondLayer::nonnegative;
  double noise = 0.0;  ///< std-dev of additive Gaussian label noise
};

struct PlantedData {
  Dataset train;
  Dataset test;
  BilinearNetwork network;
};

PlantedData planted_dataset(const PlantedConfig& config);

struct CsvSchema {
  std::string label_column;
  char delimiter = ',';
  bool header = true;
  /// Binary labels: raw label text -> +1 or -1.
  std::map<std::string, double> label_map;
  /// Multiclass labels in one-hot column order; takes precedence when non-empty.
  std::vector<std::string> classes;
  /// Feature columns to drop besides the label.
  std::vector<std::string> drop_columns;
  /// Columns of a headerless file are named "0", "1", ...
};

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

struct Split {
  Dataset train;
  Dataset test;
};

/// Seeded permutation; the first floor(fraction n) rows go to train.
Split split(const Dataset& data, double train_fraction, std::uint64_t seed);

enum class NormalizeMode { none, unit_rows, standardize };
NormalizeMode parse_normalize(std::string_view name);

/// Transforms both halves with statistics from `train` and records R_m.
Split normalize(Split data, NormalizeMode mode);

std::vector<std::uint8_t> encode_dataset(const Dataset& data);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace qsdp
