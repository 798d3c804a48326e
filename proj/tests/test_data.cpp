#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "qsdp/data.hpp"
#include "qsdp/errors.hpp"

using namespace qsdp;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& body) {
  const auto path = fs::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

// rows: id, f0..f(d-1), label in {a, b}
std::string synthetic_csv(int rows, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::string s = "id";
  for (int k = 0; k < d; ++k) s += ",f" + std::to_string(k);
  s += ",label\n";
  for (int i = 0; i < rows; ++i) {
    s += std::to_string(i);
    for (int k = 0; k < d; ++k) s += "," + std::to_string(g(rng));
    s += i % 3 ? ",a\n" : ",b\n";
  }
  return s;
}

CsvSchema binary_schema() {
  CsvSchema s;
  s.label_column = "label";
  s.label_map = {{"a", 1.0}, {"b", -1.0}};
  s.drop_columns = {"id"};
  return s;
}

}  // namespace

TEST_CASE("planted dataset matches its network") {
  PlantedConfig cfg;
  cfg.seed = 5;
  const auto p = planted_dataset(cfg);
  CHECK(p.train.n() == 100);
  CHECK(p.train.d() == 20);
  CHECK(p.test.n() == 100);
  CHECK(p.network.neurons() == 10);
  CHECK((p.network.alpha().array() >= 0.0).all());
  for (Eigen::Index i = 0; i < p.train.n(); ++i) {
    const Vector xi = p.train.x.row(i).transpose();
    CHECK(std::abs(p.train.y(i, 0) - bilinear_forward(p.network, as_span(xi))) <=
          1e-12 * (1.0 + std::abs(p.train.y(i, 0))));
  }
  CHECK(p.train.x != p.test.x);
  CHECK(p.train.row_norm == doctest::Approx(max_row_norm(p.train.x)));
}

TEST_CASE("planted_m = 0 plants the zero network") {
  PlantedConfig cfg;
  cfg.planted_m = 0;
  cfg.second_layer = SecondLayer::free;
  const auto p = planted_dataset(cfg);
  CHECK(p.train.y.isZero());
  CHECK(p.test.y.isZero());
}

TEST_CASE("planted generation is deterministic") {
  PlantedConfig cfg;
  cfg.n = 30;
  cfg.d = 5;
  cfg.seed = 77;
  cfg.noise = 0.1;
  CHECK(encode_dataset(planted_dataset(cfg).train) == encode_dataset(planted_dataset(cfg).train));
  cfg.seed = 78;
  const auto other = planted_dataset(cfg);
  cfg.seed = 77;
  CHECK(encode_dataset(other.train) != encode_dataset(planted_dataset(cfg).train));
}

TEST_CASE("CSV load and split reproduce reported sample counts") {
  const auto bc = temp_file("qsdp_bc.csv", synthetic_csv(286, 9, 1));
  const auto ds = load_csv(bc, binary_schema());
  CHECK(ds.n() == 286);
  CHECK(ds.d() == 9);
  CHECK(ds.is_classification());
  const auto s = split(ds, 228.0 / 286.0, 3);
  CHECK(s.train.n() == 228);
  CHECK(s.test.n() == 58);

  const auto io = temp_file("qsdp_io.csv", synthetic_csv(351, 34, 2));
  auto schema = binary_schema();
  schema.drop_columns.push_back("f1");
  const auto ion = load_csv(io, schema);
  CHECK(ion.d() == 33);
  const auto si = split(ion, 280.0 / 351.0, 4);
  CHECK(si.train.n() == 280);
  CHECK(si.test.n() == 71);
  fs::remove(bc);
  fs::remove(io);
}

TEST_CASE("split is a disjoint cover of the rows") {
  Dataset ds;
  ds.x = Matrix(50, 1);
  for (Eigen::Index i = 0; i < 50; ++i) ds.x(i, 0) = static_cast<double>(i);
  ds.y = Matrix::Ones(50, 1);
  const auto s = split(ds, 0.7, 9);
  std::set<double> seen;
  for (const Dataset* part : {&s.train, &s.test})
    for (Eigen::Index i = 0; i < part->n(); ++i) CHECK(seen.insert(part->x(i, 0)).second);
  CHECK(seen.size() == 50);
  CHECK(s.train.n() == 35);
  const auto again = split(ds, 0.7, 9);
  CHECK(again.train.x == s.train.x);
}

TEST_CASE("single-row file with fraction one") {
  const auto path = temp_file("qsdp_one.csv", "x,y\n1.5,a\n");
  CsvSchema schema;
  schema.label_column = "y";
  schema.label_map = {{"a", 1.0}};
  const auto s = split(load_csv(path, schema), 1.0, 0);
  CHECK(s.train.n() == 1);
  CHECK(s.test.n() == 0);
  fs::remove(path);
}

TEST_CASE("CSV errors name the offending cell") {
  CsvSchema schema;
  schema.label_column = "y";
  schema.label_map = {{"a", 1.0}, {"b", -1.0}};
  const auto bad = temp_file("qsdp_bad.csv", "x,y\n1.0,a\nfoo,b\n");
  try {
    load_csv(bad, schema);
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    CHECK(std::string(e.what()).find("'x'") != std::string::npos);
  }
  const auto label = temp_file("qsdp_label.csv", "x,y\n1.0,c\n");
  CHECK_THROWS_AS(load_csv(label, schema), IoError);
  const auto empty = temp_file("qsdp_empty.csv", "x,y\n");
  CHECK_THROWS_AS(load_csv(empty, schema), IoError);
  CHECK_THROWS_AS(load_csv(fs::temp_directory_path() / "qsdp_missing.csv", schema), IoError);
  for (const auto& p : {bad, label, empty}) fs::remove(p);
}

TEST_CASE("multiclass labels become one-hot rows") {
  const auto path = temp_file("qsdp_multi.csv", "a;b;cls\n1;2;van\n3;4;bus\n5;6;saab\n");
  CsvSchema schema;
  schema.label_column = "cls";
  schema.delimiter = ';';
  schema.classes = {"bus", "van", "saab", "opel"};
  const auto ds = load_csv(path, schema);
  CHECK(ds.outputs() == 4);
  Matrix want(3, 4);
  want << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0;
  CHECK(ds.y == want);
  CHECK(ds.is_classification());
  fs::remove(path);
}

TEST_CASE("normalize modes") {
  std::mt19937_64 rng(3);
  Split s;
  s.train.x = 3.0 * testing::gaussian(40, 4, rng) + Matrix::Constant(40, 4, 2.0);
  s.train.x.col(2).setConstant(5.0);
  s.train.y = Matrix::Zero(40, 1);
  s.test.x = testing::gaussian(10, 4, rng);
  s.test.y = Matrix::Zero(10, 1);

  const auto none = normalize(s, NormalizeMode::none);
  CHECK(none.train.x == s.train.x);

  const auto unit = normalize(s, NormalizeMode::unit_rows);
  CHECK((unit.train.x.rowwise().norm().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(unit.train.row_norm == doctest::Approx(1.0).epsilon(1e-12));

  const auto st = normalize(s, NormalizeMode::standardize);
  const Vector mean = st.train.x.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() <= 1e-12);
  for (Eigen::Index k : {0, 1, 3})
    CHECK(std::abs(st.train.x.col(k).squaredNorm() / 40.0 - 1.0) <= 1e-10);
  CHECK(st.train.x.col(2).isZero());
  const double mu0 = s.train.x.col(0).mean();
  CHECK(st.test.x(0, 0) == doctest::Approx((s.test.x(0, 0) - mu0) /
                                           std::sqrt((s.train.x.col(0).array() - mu0).square().mean())));
  CHECK(parse_normalize("standardize") == NormalizeMode::standardize);
  CHECK_THROWS_AS(parse_normalize("minmax"), InvalidInput);
}

TEST_CASE("QDAT cache round trip") {
  PlantedConfig cfg;
  cfg.n = 12;
  cfg.d = 3;
  const auto ds = planted_dataset(cfg).train;
  const auto bytes = encode_dataset(ds);
  CHECK(bytes.size() == 4 + 2 + 12 + 8 * 12 * 4);
  const auto back = decode_dataset(bytes);
  CHECK(back.x == ds.x);
  CHECK(back.y == ds.y);

  const auto path = fs::temp_directory_path() / "qsdp_cache.qdat";
  save_dataset(path, ds);
  CHECK(load_dataset(path).x == ds.x);
  fs::remove(path);

  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS_AS(decode_dataset(cut), IoError);
  auto magic = bytes;
  magic[1] = 'X';
  CHECK_THROWS_AS(decode_dataset(magic), IoError);
}

TEST_CASE("invalid datasets are rejected") {
  Dataset ds;
  ds.x = Matrix::Ones(3, 2);
  ds.y = Matrix::Ones(2, 1);
  CHECK_THROWS_AS(validate(ds), InvalidInput);
  ds.y = Matrix::Ones(3, 1);
  ds.x(0, 0) = std::nan("");
  CHECK_THROWS_AS(validate(ds), InvalidInput);
}
