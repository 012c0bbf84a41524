#pragma once

#include <cstdint>
#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "twophoton/campaign.hpp"
#include "twophoton/oracle.hpp"

namespace twophoton::io {

struct PropagateSettings {
  double z = 78.5;
  double snapshot_dz = 0.0;  // 0: final state only
  bool project = true;  // false needs allow_unprojected
  bool allow_unprojected = false;
  bool sweep_reference = true;
  metrics::SweepOptions sweep;
};

// Everything one run needs, parsed from a single YAML document. Sections
// not used by a subcommand are ignored by it.
struct RunConfig {
  lattice::ModelSpec model = lattice::HaldaneSpec{};
  bool disorder_enabled = false;
  lattice::DisorderSpec disorder;
  std::vector<campaign::NamedRecipe> recipes;  // empty: command default
  PropagateSettings propagate;
  int instances = 20;
  std::uint64_t base_seed = 1;
  double max_failure_fraction = 0.01;
  double window_threshold = 0.01;
  campaign::ScanGrid scan_grid;
  int scan_instances = 1;
  std::vector<std::pair<int, int>> sizes{{10, 90}, {20, 90}, {10, 180}};
  bool scale_distance = true;
  spectral::ClassifyOptions classify;
  oracle::VerifyConfig verify;
  int workers = 0;
};

// Throws ConfigError whose field is the dotted key path and whose message
// carries the source line.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Canonical YAML for a parsed config; parse_config(to_yaml(c)) == c.
std::string to_yaml(const RunConfig& cfg);

// %.17g
std::string format_double(double x);

void write_matrix_csv(std::ostream& out, const RealMatrix& m);
void write_vector_csv(std::ostream& out, const std::string& header, const RealVector& v);

// Raw little-endian float64, row-major (complex: interleaved re, im), with a
// JSON sidecar `<path>.json` describing shape, dtype and `meta`.
void write_array(const std::filesystem::path& path, const RealMatrix& m, const nlohmann::json& meta);
void write_array(const std::filesystem::path& path, const Matrix& m, const nlohmann::json& meta);
RealMatrix read_real_array(const std::filesystem::path& path);

nlohmann::json to_json(const oracle::VerifyReport& report);

// Collects run metadata and the output inventory; written once at the end
// through a temporary file and rename.
class Manifest {
 public:
  Manifest(std::filesystem::path out_dir, std::string command, const RunConfig& cfg);

  void add_seed(std::uint64_t seed) { seeds_.push_back(seed); }
  void add_lattice_hash(const std::string& name, const std::string& digest);
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }
  // Records a file under the output directory with its SHA-256.
  void record(const std::filesystem::path& file);
  void write();

  const std::filesystem::path& out_dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::string config_yaml_;
  std::vector<std::uint64_t> seeds_;
  nlohmann::json hashes_ = nlohmann::json::object();
  nlohmann::json extra_ = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> files_;
  std::chrono::steady_clock::time_point start_;
};

std::string version();

}  // namespace twophoton::io
