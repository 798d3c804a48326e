#include "qsdp/serialize.hpp"

#include <fstream>
#include <sstream>

#include "qsdp/errors.hpp"

namespace qsdp {

namespace {

void require_format(const Json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format)
    throw IoError(std::string("expected a '") + format + "' document");
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("document is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError("matrix rows have unequal lengths");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw IoError("matrix entry is not a number");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

Json to_json(const SolverConfig& c) {
  return {{"eps_abs", c.eps_abs},           {"eps_rel", c.eps_rel},
          {"max_iterations", c.max_iterations}, {"penalty", c.penalty},
          {"adapt_penalty", c.adapt_penalty},   {"adapt_factor", c.adapt_factor},
          {"adapt_ratio", c.adapt_ratio},       {"adapt_interval", c.adapt_interval},
          {"relaxation", c.relaxation},
          {"seed", c.seed},                     {"psd_tol", c.psd_tol},
          {"diag_tol", c.diag_tol},             {"allow_unconverged", c.allow_unconverged}};
}

Json to_json(const SdpSolution& s) {
  Json blocks = Json::array();
  for (const auto& b : s.blocks) blocks.push_back(matrix_to_json(b));
  return {{"format", "qsdp-solution"},
          {"version", 1},
          {"variant", std::string(to_string(s.variant))},
          {"loss", std::string(to_string(s.loss))},
          {"beta", s.beta},
          {"n", s.n},
          {"d", s.d},
          {"rho", s.rho},
          {"blocks", std::move(blocks)},
          {"predictions", matrix_to_json(s.predictions)},
          {"objective", s.objective},
          {"primal_residual", s.primal_residual},
          {"dual_residual", s.dual_residual},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"wall_seconds", s.wall_seconds},
          {"config", to_json(s.config)}};
}

SdpSolution solution_from_json(const Json& j) {
  require_format(j, "qsdp-solution");
  SdpSolution s;
  try {
    s.variant = parse_variant(field<std::string>(j, "variant"));
    s.loss = parse_loss(field<std::string>(j, "loss"));
  } catch (const InvalidInput& e) {
    throw IoError(e.what());
  }
  s.beta = field<double>(j, "beta");
  s.n = field<Eigen::Index>(j, "n");
  s.d = field<Eigen::Index>(j, "d");
  s.rho = field<std::vector<double>>(j, "rho");
  for (const auto& b : field<Json>(j, "blocks")) s.blocks.push_back(matrix_from_json(b));
  s.predictions = matrix_from_json(field<Json>(j, "predictions"));
  s.objective = field<double>(j, "objective");
  s.primal_residual = field<double>(j, "primal_residual");
  s.dual_residual = field<double>(j, "dual_residual");
  s.iterations = field<long>(j, "iterations");
  s.converged = field<bool>(j, "converged");
  s.wall_seconds = field<double>(j, "wall_seconds");
  const Json c = field<Json>(j, "config");
  s.config.eps_abs = field<double>(c, "eps_abs");
  s.config.eps_rel = field<double>(c, "eps_rel");
  s.config.max_iterations = field<long>(c, "max_iterations");
  s.config.penalty = field<double>(c, "penalty");
  s.config.adapt_penalty = field<bool>(c, "adapt_penalty");
  s.config.adapt_factor = field<double>(c, "adapt_factor");
  s.config.adapt_ratio = field<double>(c, "adapt_ratio");
  s.config.adapt_interval = field<long>(c, "adapt_interval");
  s.config.relaxation = field<double>(c, "relaxation");
  s.config.seed = field<std::uint64_t>(c, "seed");
  s.config.psd_tol = field<double>(c, "psd_tol");
  s.config.diag_tol = field<double>(c, "diag_tol");
  s.config.allow_unconverged = field<bool>(c, "allow_unconverged");
  if (s.blocks.size() != s.rho.size() && s.variant != SdpVariant::quadratic)
    throw IoError("solution has mismatched blocks and rho");
  return s;
}

Json to_json(const std::vector<ShapedCovariance>& shaped) {
  Json classes = Json::array();
  for (const auto& q : shaped)
    classes.push_back({{"gamma", q.gamma}, {"rho", q.rho}, {"q", matrix_to_json(q.q)}});
  return {{"format", "qsdp-shaped"}, {"version", 1}, {"classes", std::move(classes)}};
}

std::vector<ShapedCovariance> shaped_from_json(const Json& j) {
  require_format(j, "qsdp-shaped");
  std::vector<ShapedCovariance> out;
  for (const auto& c : field<Json>(j, "classes")) {
    ShapedCovariance q;
    q.gamma = field<double>(c, "gamma");
    q.rho = field<double>(c, "rho");
    q.q = matrix_from_json(field<Json>(c, "q"));
    if (q.q.rows() != q.q.cols() || q.q.rows() % 2 != 0)
      throw IoError("shaped covariance must be 2d x 2d");
    out.push_back(std::move(q));
  }
  if (out.empty()) throw IoError("shaped document has no classes");
  return out;
}

Json to_json(const Metrics& m) {
  Json j = {{"objective", m.objective}, {"loss", m.loss}, {"regularizer", m.regularizer}};
  j["accuracy"] = m.accuracy ? Json(*m.accuracy) : Json(nullptr);
  return j;
}

Json to_json(const TrainResult& t) {
  return {{"format", "qsdp-baseline-weights"},
          {"version", 1},
          {"u", matrix_to_json(t.u)},
          {"v", matrix_to_json(t.v)},
          {"alpha", matrix_to_json(t.alpha)}};
}

TrainResult train_result_from_json(const Json& j) {
  require_format(j, "qsdp-baseline-weights");
  TrainResult t;
  t.u = matrix_from_json(field<Json>(j, "u"));
  t.v = matrix_from_json(field<Json>(j, "v"));
  t.alpha = matrix_from_json(field<Json>(j, "alpha"));
  return t;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace qsdp
