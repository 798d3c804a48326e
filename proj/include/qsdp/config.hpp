#pragma once

// Strict JSON configuration: every key must be known, type errors and
// unknown keys raise ConfigError carrying the JSON pointer of the key.

#include <set>
#include <string>

#include "qsdp/baseline.hpp"
#include "qsdp/data.hpp"
#include "qsdp/errors.hpp"
#include "qsdp/sdp.hpp"
#include "qsdp/serialize.hpp"

namespace qsdp {

inline constexpr int kConfigVersion = 1;

class ConfigReader {
 public:
  ConfigReader(const Json& j, std::string path = "");

  bool has(const std::string& key) const;
  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const { return path_ + "/" + key; }

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return require<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(key_path(key), "required key is missing");
    try {
      return json_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(key_path(key), "has the wrong type (" +
                                           std::string(json_.at(key).type_name()) + ")");
    }
  }

  ConfigReader child(const std::string& key);
  /// Raw JSON of a key, marked as used.
  const Json& raw(const std::string& key);
  /// Throws ConfigError for the first key never read.
  void finish() const;

 private:
  const Json& json_;
  std::string path_;
  std::set<std::string> used_;
};

SolverConfig parse_solver(ConfigReader r);
PlantedConfig parse_planted(ConfigReader r);
TrainConfig parse_train(ConfigReader r);

struct DatasetSpec {
  enum class Source { planted, csv, cache } source = Source::planted;
  PlantedConfig planted{};
  std::string csv_path;
  CsvSchema schema{};
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
  std::string train_cache, test_cache;
  NormalizeMode normalize = NormalizeMode::none;
};

DatasetSpec parse_dataset(ConfigReader r);

struct LoadedData {
  Split split;
  std::optional<BilinearNetwork> planted;
};
LoadedData load_data(const DatasetSpec& spec);

}  // namespace qsdp
