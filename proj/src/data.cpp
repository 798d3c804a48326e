#include "qsdp/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include "qsdp/errors.hpp"

namespace qsdp {

namespace {

constexpr std::uint16_t kDatasetVersion = 1;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    cells.push_back(trim(std::string_view(line).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

Dataset take_rows(const Dataset& data, const std::vector<Eigen::Index>& rows,
                  const char* tag) {
  Dataset out;
  out.name = data.name;
  out.provenance = data.provenance;
  out.split = tag;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), data.d());
  out.y.resize(static_cast<Eigen::Index>(rows.size()), data.outputs());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(rows[i]);
    out.y.row(static_cast<Eigen::Index>(i)) = data.y.row(rows[i]);
  }
  out.row_norm = max_row_norm(out.x);
  return out;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint64_t v) {
  if (v > 0xffffffffu) throw InvalidInput("dataset dimension does not fit in u32");
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

}  // namespace

bool Dataset::is_classification() const {
  if (y.size() == 0) return false;
  if (y.cols() == 1)
    return (y.array() == 1.0 || y.array() == -1.0).all();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    if (!(y.row(i).array() == 0.0 || y.row(i).array() == 1.0).all()) return false;
    if (y.row(i).sum() != 1.0) return false;
  }
  return true;
}

double max_row_norm(const Matrix& x) {
  return x.rows() == 0 ? 0.0 : x.rowwise().norm().maxCoeff();
}

void validate(const Dataset& data) {
  if (data.x.rows() != data.y.rows())
    throw InvalidInput("X has " + std::to_string(data.x.rows()) + " rows but y has " +
                       std::to_string(data.y.rows()));
  if (data.y.cols() < 1) throw InvalidInput("y needs at least one column");
  if (!data.x.allFinite() || !data.y.allFinite())
    throw InvalidInput("dataset contains NaN or Inf");
}

PlantedData planted_dataset(const PlantedConfig& cfg) {
  if (cfg.n < 1 || cfg.d < 1 || cfg.planted_m < 0)
    throw InvalidInput("planted dataset needs n, d >= 1 and planted_m >= 0");
  if (cfg.noise < 0.0) throw InvalidInput("noise must be nonnegative");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin;

  // planted_m = 0 is stored as a single neuron with zero weight
  const Eigen::Index m = std::max<Eigen::Index>(cfg.planted_m, 1);
  SignMatrix u(m, cfg.d), v(m, cfg.d);
  Vector alpha = Vector::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < cfg.d; ++i) {
      u(j, i) = coin(rng) ? 1 : -1;
      v(j, i) = coin(rng) ? 1 : -1;
    }
  if (cfg.planted_m > 0)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double g = normal(rng);
      alpha(j) = (cfg.second_layer == SecondLayer::nonnegative ? std::abs(g) : g) /
                 static_cast<double>(cfg.planted_m);
    }
  BilinearNetwork net(std::move(u), std::move(v), alpha);

  auto make = [&](const char* tag) {
    Dataset ds;
    ds.x.resize(cfg.n, cfg.d);
    for (Eigen::Index i = 0; i < cfg.n; ++i)
      for (Eigen::Index k = 0; k < cfg.d; ++k) ds.x(i, k) = normal(rng);
    ds.y = bilinear_predict(net, ds.x);
    if (cfg.noise > 0.0)
      for (Eigen::Index i = 0; i < cfg.n; ++i) ds.y(i, 0) += cfg.noise * normal(rng);
    ds.name = "planted";
    ds.split = tag;
    ds.provenance = "planted seed=" + std::to_string(cfg.seed);
    ds.row_norm = max_row_norm(ds.x);
    return ds;
  };
  Dataset train = make("train");
  Dataset test = make("test");
  return {std::move(train), std::move(test), std::move(net)};
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const bool multiclass = !schema.classes.empty();
  if (!multiclass && schema.label_map.empty())
    throw InvalidInput("CSV schema needs a label_map or a classes list");

  std::vector<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<double>> labels;
  std::size_t label_idx = 0;
  std::vector<bool> keep;

  auto setup_columns = [&](std::size_t count) {
    if (names.empty())
      for (std::size_t c = 0; c < count; ++c) names.push_back(std::to_string(c));
    const auto it = std::find(names.begin(), names.end(), schema.label_column);
    if (it == names.end())
      throw InvalidInput("label column '" + schema.label_column + "' not found in " +
                         path.string());
    label_idx = static_cast<std::size_t>(it - names.begin());
    keep.assign(names.size(), true);
    keep[label_idx] = false;
    for (const auto& drop : schema.drop_columns) {
      const auto d = std::find(names.begin(), names.end(), drop);
      if (d == names.end()) throw InvalidInput("drop column '" + drop + "' not found");
      keep[static_cast<std::size_t>(d - names.begin())] = false;
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line, schema.delimiter);
    if (keep.empty()) {
      if (schema.header) {
        names = std::move(cells);
        setup_columns(names.size());
        continue;
      }
      setup_columns(cells.size());
    }
    if (cells.size() != names.size())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(names.size()) + " cells, got " +
                    std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!keep[c]) continue;
      double value = 0.0;
      const auto& cell = cells[c];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": column '" +
                      names[c] + "' has unparseable value '" + cell + "'");
      row.push_back(value);
    }
    const auto& raw = cells[label_idx];
    if (multiclass) {
      const auto it = std::find(schema.classes.begin(), schema.classes.end(), raw);
      if (it == schema.classes.end())
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": unknown label '" + raw + "'");
      std::vector<double> onehot(schema.classes.size(), 0.0);
      onehot[static_cast<std::size_t>(it - schema.classes.begin())] = 1.0;
      labels.push_back(std::move(onehot));
    } else {
      const auto it = schema.label_map.find(raw);
      if (it == schema.label_map.end())
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": unknown label '" + raw + "'");
      labels.push_back({it->second});
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + " has no data rows");

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(rows.size());
  ds.x.resize(n, static_cast<Eigen::Index>(rows[0].size()));
  ds.y.resize(n, static_cast<Eigen::Index>(labels[0].size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const auto& l = labels[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < r.size(); ++k) ds.x(i, static_cast<Eigen::Index>(k)) = r[k];
    for (std::size_t k = 0; k < l.size(); ++k) ds.y(i, static_cast<Eigen::Index>(k)) = l[k];
  }
  ds.name = path.stem().string();
  ds.provenance = path.string();
  ds.row_norm = max_row_norm(ds.x);
  validate(ds);
  return ds;
}

Split split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw InvalidInput("train fraction must lie in [0, 1]");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.n()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(data.n()) + 1e-9));
  const std::vector<Eigen::Index> train(perm.begin(), perm.begin() + n_train);
  const std::vector<Eigen::Index> test(perm.begin() + n_train, perm.end());
  return {take_rows(data, train, "train"), take_rows(data, test, "test")};
}

NormalizeMode parse_normalize(std::string_view name) {
  if (name == "none") return NormalizeMode::none;
  if (name == "unit_rows") return NormalizeMode::unit_rows;
  if (name == "standardize") return NormalizeMode::standardize;
  throw InvalidInput("unknown normalize mode '" + std::string(name) + "'");
}

Split normalize(Split data, NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::none:
      break;
    case NormalizeMode::unit_rows:
      for (Dataset* ds : {&data.train, &data.test})
        for (Eigen::Index i = 0; i < ds->n(); ++i) {
          const double norm = ds->x.row(i).norm();
          if (norm > 0.0) ds->x.row(i) /= norm;
        }
      break;
    case NormalizeMode::standardize: {
      const auto n = data.train.n();
      if (n == 0) throw InvalidInput("cannot standardize with an empty train split");
      const Vector mean = data.train.x.colwise().mean();
      Vector scale = Vector::Ones(data.train.d());
      for (Eigen::Index k = 0; k < data.train.d(); ++k) {
        const double var =
            (data.train.x.col(k).array() - mean(k)).square().sum() / static_cast<double>(n);
        if (var > 0.0) scale(k) = 1.0 / std::sqrt(var);
      }
      for (Dataset* ds : {&data.train, &data.test})
        ds->x = ((ds->x.rowwise() - mean.transpose()).array().rowwise() *
                 scale.transpose().array()).matrix();
      break;
    }
  }
  data.train.row_norm = max_row_norm(data.train.x);
  data.test.row_norm = max_row_norm(data.test.x);
  return data;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
  validate(data);
  std::vector<std::uint8_t> out{'Q', 'D', 'A', 'T'};
  out.push_back(static_cast<std::uint8_t>(kDatasetVersion & 0xff));
  out.push_back(static_cast<std::uint8_t>(kDatasetVersion >> 8));
  put_u32(out, static_cast<std::uint64_t>(data.n()));
  put_u32(out, static_cast<std::uint64_t>(data.d()));
  put_u32(out, static_cast<std::uint64_t>(data.outputs()));
  for (Eigen::Index i = 0; i < data.n(); ++i)
    for (Eigen::Index k = 0; k < data.d(); ++k) put_f64(out, data.x(i, k));
  for (Eigen::Index i = 0; i < data.n(); ++i)
    for (Eigen::Index k = 0; k < data.outputs(); ++k) put_f64(out, data.y(i, k));
  return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw IoError("dataset file is truncated");
    const auto* p = bytes.data() + pos;
    pos += n;
    return p;
  };
  auto u32 = [&] {
    const auto* p = take(4);
    return static_cast<Eigen::Index>(p[0] | (p[1] << 8) | (p[2] << 16) |
                                     (std::uint32_t{p[3]} << 24));
  };
  auto f64 = [&] {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return std::bit_cast<double>(v);
  };
  if (std::memcmp(take(4), "QDAT", 4) != 0) throw IoError("not a dataset file (bad magic)");
  const auto* ver = take(2);
  if ((ver[0] | (ver[1] << 8)) != kDatasetVersion)
    throw IoError("unsupported dataset file version");
  const auto n = u32(), d = u32(), c = u32();
  if (bytes.size() - pos != static_cast<std::size_t>(n * (d + c)) * 8)
    throw IoError("dataset payload size does not match its header");
  Dataset ds;
  ds.x.resize(n, d);
  ds.y.resize(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) ds.x(i, k) = f64();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < c; ++k) ds.y(i, k) = f64();
  ds.row_norm = max_row_norm(ds.x);
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  const auto bytes = encode_dataset(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  Dataset ds = decode_dataset(bytes);
  ds.name = path.stem().string();
  ds.provenance = path.string();
  return ds;
}

}  // namespace qsdp
