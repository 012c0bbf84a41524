#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "twophoton/hash.hpp"
#include "twophoton/io.hpp"

using namespace twophoton;
using namespace twophoton::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("twophoton_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text, "case.yaml");
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected ConfigError for: " << text);
  return ConfigError("", "");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
  const RunConfig c = parse_config("{}");
  const auto& h = std::get<lattice::HaldaneSpec>(c.model);
  CHECK(h.nx == 10);
  CHECK(h.ny == 90);
  CHECK(h.t2 == 0.2);
  CHECK_FALSE(c.disorder_enabled);
  CHECK(c.propagate.z == 78.5);
  CHECK(c.propagate.sweep.z_min == 70.0);
  CHECK(c.propagate.sweep.z_max == 80.0);
  CHECK(c.propagate.sweep.dz == 0.1);
  CHECK(c.instances == 20);
  CHECK(c.recipes.empty());
}

TEST_CASE("model, disorder and recipes are parsed") {
  const RunConfig c = parse_config(R"(
model:
  type: qhe
  nx: 8
  ny: 40
  flux: 0.5
  input_edge_length: 6
disorder:
  sigma: 0.3
  seed: 9
recipes:
  - preset: product
  - name: custom
    sigma_c: 2.0
    sigma_a: 0.5
    x0: 3.5
)");
  const auto& q = std::get<lattice::QheSpec>(c.model);
  CHECK(q.nx == 8);
  CHECK(q.flux == 0.5);
  CHECK(c.disorder_enabled);
  CHECK(c.disorder.sigma == 0.3);
  CHECK(c.disorder.seed == 9);
  REQUIRE(c.recipes.size() == 2);
  CHECK(c.recipes[0].name == "product");
  CHECK(c.recipes[0].recipe.phase == biphoton::PhaseConvention::Quarter);
  CHECK(c.recipes[1].name == "custom");
  CHECK(c.recipes[1].recipe.x0.value() == 3.5);
  CHECK(c.recipes[1].recipe.input_edge_length == 6);

  const RunConfig std5 = parse_config("recipes: standard\n");
  CHECK(std5.recipes.size() == 5);
}

TEST_CASE("errors name the field and the line") {
  ConfigError e = parse_error("model:\n  nx: 0\n");
  CHECK(e.field() == "model.nx");
  CHECK(std::string(e.what()).find("case.yaml line 2") != std::string::npos);

  e = parse_error("model:\n  nx: ten\n");
  CHECK(e.field() == "model.nx");

  e = parse_error("propagate:\n  z: 1\n  zz: 2\n");
  CHECK(e.field() == "propagate.zz");
  CHECK(std::string(e.what()).find("unknown key") != std::string::npos);

  e = parse_error("bogus: 1\n");
  CHECK(e.field() == "bogus");

  e = parse_error("disorder:\n  sigma: -1\n");
  CHECK(e.field() == "disorder.sigma");

  e = parse_error("model:\n  type: haldane\n  flux: 1\n");
  CHECK(e.field().rfind("model", 0) == 0);

  e = parse_error("recipes:\n  - preset: nope\n");
  CHECK(e.field() == "recipes[0].preset");

  e = parse_error("propagate:\n  project: false\n");
  CHECK(e.field() == "propagate.project");
  CHECK_NOTHROW(parse_config("propagate:\n  project: false\n  allow_unprojected: true\n"));

  e = parse_error("model: [1, 2\n");
  CHECK(std::string(e.what()).find("line") != std::string::npos);
}

TEST_CASE("canonical YAML round-trips") {
  const std::string text = R"(
model:
  type: haldane
  nx: 12
  ny: 60
  t2: 0.15
disorder:
  sigma: 0.7
  seed: 3
recipes: standard
propagate:
  z: 12.25
  snapshot_dz: 0.1
scan:
  points: 4
size_study:
  sizes: [[4, 30], [5, 30]]
verify:
  distances: [0.5, 2]
workers: 2
)";
  const RunConfig a = parse_config(text);
  const std::string y1 = to_yaml(a);
  const RunConfig b = parse_config(y1);
  CHECK(to_yaml(b) == y1);
  CHECK(std::get<lattice::HaldaneSpec>(b.model).t2 == 0.15);
  CHECK(b.propagate.snapshot_dz == 0.1);
  CHECK(b.recipes.size() == 5);
  CHECK(b.recipes[0].recipe.sigma_c == a.recipes[0].recipe.sigma_c);
  CHECK(b.sizes.size() == 2);
  CHECK(b.verify.distances.size() == 2);
  CHECK(b.workers == 2);
}

TEST_CASE("shipped configs parse") {
  const fs::path dir = fs::path(TWOPHOTON_SOURCE_DIR) / "configs";
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()));
    ++n;
  }
  CHECK(n >= 5);
  CHECK_THROWS_AS(load_config(dir / "does_not_exist.yaml"), ConfigError);
}

TEST_CASE("doubles are written with 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(2.0) == "2");
  RealMatrix m(2, 2);
  m << 1.0 / 3.0, 2.0, -0.5, 1e-300;
  std::ostringstream out;
  write_matrix_csv(out, m);
  std::istringstream in(out.str());
  for (Index i = 0; i < 2; ++i) {
    std::string line;
    std::getline(in, line);
    std::stringstream row(line);
    for (Index j = 0; j < 2; ++j) {
      std::string cell;
      std::getline(row, cell, ',');
      CHECK(std::stod(cell) == m(i, j));
    }
  }
}

TEST_CASE("binary arrays and sidecars") {
  const fs::path dir = scratch_dir("arrays");
  RealMatrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6.5;
  write_array(dir / "m.bin", m, {{"what", "test"}});
  CHECK(fs::file_size(dir / "m.bin") == 6 * sizeof(double));
  const nlohmann::json side = nlohmann::json::parse(slurp(dir / "m.bin.json"));
  CHECK(side["shape"][0] == 2);
  CHECK(side["shape"][1] == 3);
  CHECK(side["dtype"] == "float64");
  CHECK(side["meta"]["what"] == "test");
  CHECK(side["sha256"] == sha256_file(dir / "m.bin"));
  CHECK(read_real_array(dir / "m.bin") == m);

  Matrix c(1, 2);
  c << Complex(1, 2), Complex(3, 4);
  write_array(dir / "c.bin", c, nlohmann::json::object());
  const nlohmann::json cs = nlohmann::json::parse(slurp(dir / "c.bin.json"));
  CHECK(cs["dtype"] == "complex128");
  CHECK(fs::file_size(dir / "c.bin") == 4 * sizeof(double));
  CHECK_THROWS_AS(read_real_array(dir / "c.bin"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("SHA-256 known answers") {
  CHECK(sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest lists files with checksums") {
  const fs::path dir = scratch_dir("manifest");
  const RunConfig cfg = parse_config("{}");
  Manifest m(dir, "spectrum", cfg);
  {
    std::ofstream(dir / "a.csv") << "x\n1\n";
  }
  m.add_seed(5);
  m.add_lattice_hash("clean", "deadbeef");
  m.set("answer", 42);
  m.record("a.csv");
  m.write();
  CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
  const nlohmann::json doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(doc["command"] == "spectrum");
  CHECK(doc["version"] == version());
  CHECK(doc["seeds"][0] == 5);
  CHECK(doc["lattice_hashes"]["clean"] == "deadbeef");
  CHECK(doc["results"]["answer"] == 42);
  CHECK(doc["files"][0]["path"] == "a.csv");
  CHECK(doc["files"][0]["sha256"] == sha256_file(dir / "a.csv"));
  CHECK(doc["config_sha256"] == sha256_hex(std::string_view(doc["config"].get<std::string>())));
  CHECK(to_yaml(parse_config(doc["config"].get<std::string>())) == doc["config"].get<std::string>());
  fs::remove_all(dir);
}

TEST_CASE("verify report serialises every field") {
  oracle::VerifyReport r;
  r.conserving_cases = 3;
  r.max_generic_difference = 1e-15;
  r.lattices.push_back({});
  r.lattices[0].name = "x";
  const nlohmann::json j = to_json(r);
  CHECK(j["conserving_cases"] == 3);
  CHECK(j["max_generic_difference"] == 1e-15);
  CHECK(j["lattices"][0]["name"] == "x");
}
