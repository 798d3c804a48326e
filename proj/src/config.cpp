#include "qsdp/config.hpp"

namespace qsdp {

ConfigReader::ConfigReader(const Json& j, std::string path) : json_(j), path_(std::move(path)) {
  if (!json_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
}

bool ConfigReader::has(const std::string& key) const { return json_.contains(key); }

ConfigReader ConfigReader::child(const std::string& key) {
  used_.insert(key);
  if (!has(key)) throw ConfigError(key_path(key), "required section is missing");
  return ConfigReader(json_.at(key), key_path(key));
}

const Json& ConfigReader::raw(const std::string& key) {
  used_.insert(key);
  if (!has(key)) throw ConfigError(key_path(key), "required key is missing");
  return json_.at(key);
}

void ConfigReader::finish() const {
  for (const auto& [key, value] : json_.items())
    if (!used_.count(key)) throw ConfigError(key_path(key), "unknown key");
}

SolverConfig parse_solver(ConfigReader r) {
  SolverConfig c;
  c.eps_abs = r.get("eps_abs", c.eps_abs);
  c.eps_rel = r.get("eps_rel", c.eps_rel);
  c.max_iterations = r.get("max_iterations", c.max_iterations);
  c.penalty = r.get("penalty", c.penalty);
  c.adapt_penalty = r.get("adapt_penalty", c.adapt_penalty);
  c.adapt_factor = r.get("adapt_factor", c.adapt_factor);
  c.adapt_ratio = r.get("adapt_ratio", c.adapt_ratio);
  c.adapt_interval = r.get("adapt_interval", c.adapt_interval);
  c.relaxation = r.get("relaxation", c.relaxation);
  c.seed = r.get("seed", c.seed);
  c.psd_tol = r.get("psd_tol", c.psd_tol);
  c.diag_tol = r.get("diag_tol", c.diag_tol);
  c.allow_unconverged = r.get("allow_unconverged", c.allow_unconverged);
  if (!(c.eps_abs > 0.0) || !(c.eps_rel >= 0.0))
    throw ConfigError(r.key_path("eps_abs"), "tolerances must be positive");
  if (c.max_iterations < 1) throw ConfigError(r.key_path("max_iterations"), "must be >= 1");
  if (!(c.penalty > 0.0)) throw ConfigError(r.key_path("penalty"), "must be > 0");
  if (!(c.relaxation > 0.0 && c.relaxation < 2.0))
    throw ConfigError(r.key_path("relaxation"), "must lie in (0, 2)");
  r.finish();
  return c;
}

PlantedConfig parse_planted(ConfigReader r) {
  PlantedConfig c;
  c.n = r.get("n", c.n);
  c.d = r.get("d", c.d);
  c.planted_m = r.get("planted_m", c.planted_m);
  c.seed = r.get("seed", c.seed);
  const auto mode = r.get<std::string>("second_layer", "nonnegative");
  if (mode == "nonnegative") c.second_layer = SecondLayer::nonnegative;
  else if (mode == "free") c.second_layer = SecondLayer::free;
  else throw ConfigError(r.key_path("second_layer"), "expected 'nonnegative' or 'free'");
  c.noise = r.get("noise", c.noise);
  if (c.n < 1 || c.d < 1) throw ConfigError(r.path(), "n and d must be >= 1");
  if (c.planted_m < 0) throw ConfigError(r.key_path("planted_m"), "must be >= 0");
  if (c.noise < 0.0) throw ConfigError(r.key_path("noise"), "must be >= 0");
  r.finish();
  return c;
}

TrainConfig parse_train(ConfigReader r) {
  TrainConfig c;
  c.m = r.get("m", c.m);
  c.learning_rate = r.get("learning_rate", c.learning_rate);
  c.scale_lr_with_m = r.get("scale_lr_with_m", c.scale_lr_with_m);
  c.momentum = r.get("momentum", c.momentum);
  c.epochs = r.get("epochs", c.epochs);
  c.batch_size = r.get("batch_size", c.batch_size);
  c.seed = r.get("seed", c.seed);
  const auto mode = r.get<std::string>("second_layer", "fixed_uniform");
  if (mode == "fixed_uniform") c.second_layer = SecondLayerMode::fixed_uniform;
  else if (mode == "free") c.second_layer = SecondLayerMode::free;
  else throw ConfigError(r.key_path("second_layer"), "expected 'fixed_uniform' or 'free'");
  try {
    c.loss = parse_loss(r.get<std::string>("loss", "squared"));
    validate(c);
  } catch (const InvalidInput& e) {
    throw ConfigError(r.path(), e.what());
  }
  r.finish();
  return c;
}

DatasetSpec parse_dataset(ConfigReader r) {
  DatasetSpec s;
  int sources = 0;
  if (r.has("planted")) {
    ++sources;
    s.source = DatasetSpec::Source::planted;
    s.planted = parse_planted(r.child("planted"));
  }
  if (r.has("csv")) {
    ++sources;
    s.source = DatasetSpec::Source::csv;
    auto c = r.child("csv");
    s.csv_path = c.require<std::string>("path");
    s.schema.label_column = c.require<std::string>("label_column");
    const auto delim = c.get<std::string>("delimiter", ",");
    if (delim.size() != 1) throw ConfigError(c.key_path("delimiter"), "must be one character");
    s.schema.delimiter = delim[0];
    s.schema.header = c.get("header", true);
    s.schema.label_map = c.get("label_map", std::map<std::string, double>{});
    for (const auto& [k, v] : s.schema.label_map)
      if (v != 1.0 && v != -1.0)
        throw ConfigError(c.key_path("label_map") + "/" + k, "labels must map to +1 or -1");
    s.schema.classes = c.get("classes", std::vector<std::string>{});
    s.schema.drop_columns = c.get("drop_columns", std::vector<std::string>{});
    if (s.schema.label_map.empty() && s.schema.classes.empty())
      throw ConfigError(c.path(), "needs label_map or classes");
    s.train_fraction = c.get("train_fraction", s.train_fraction);
    s.split_seed = c.get("split_seed", s.split_seed);
    if (!(s.train_fraction >= 0.0 && s.train_fraction <= 1.0))
      throw ConfigError(c.key_path("train_fraction"), "must lie in [0, 1]");
    c.finish();
  }
  if (r.has("cache")) {
    ++sources;
    s.source = DatasetSpec::Source::cache;
    auto c = r.child("cache");
    s.train_cache = c.require<std::string>("train");
    s.test_cache = c.get<std::string>("test", "");
    c.finish();
  }
  if (sources != 1)
    throw ConfigError(r.path(), "exactly one of 'planted', 'csv', 'cache' is required");
  try {
    s.normalize = parse_normalize(r.get<std::string>("normalize", "none"));
  } catch (const InvalidInput& e) {
    throw ConfigError(r.key_path("normalize"), e.what());
  }
  r.finish();
  return s;
}

LoadedData load_data(const DatasetSpec& spec) {
  LoadedData out;
  switch (spec.source) {
    case DatasetSpec::Source::planted: {
      auto p = planted_dataset(spec.planted);
      out.split = {std::move(p.train), std::move(p.test)};
      out.planted = std::move(p.network);
      break;
    }
    case DatasetSpec::Source::csv:
      out.split = split(load_csv(spec.csv_path, spec.schema), spec.train_fraction,
                        spec.split_seed);
      break;
    case DatasetSpec::Source::cache: {
      out.split.train = load_dataset(spec.train_cache);
      out.split.train.split = "train";
      if (!spec.test_cache.empty()) {
        out.split.test = load_dataset(spec.test_cache);
      } else {
        out.split.test.x.resize(0, out.split.train.d());
        out.split.test.y.resize(0, out.split.train.outputs());
      }
      out.split.test.split = "test";
      break;
    }
  }
  out.split = normalize(std::move(out.split), spec.normalize);
  return out;
}

}  // namespace qsdp
