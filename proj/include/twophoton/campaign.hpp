#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twophoton/biphoton.hpp"
#include "twophoton/lattice.hpp"
#include "twophoton/metrics.hpp"
#include "twophoton/spectral.hpp"

namespace twophoton::campaign {

// Clean lattice plus the edge modes everything else is measured against.
struct Reference {
  lattice::Lattice lattice;
  lattice::SparseOperator sparse;
  std::vector<spectral::GapInfo> gaps;  // gaps used for classification
  spectral::GapInfo gap;                // the primary (lowest) gap
  std::shared_ptr<const spectral::EigenSystem> system;
  std::shared_ptr<const biphoton::TwoPhotonEigenbasis> basis;
  std::string digest;

  const lattice::LatticeGeometry& geometry() const { return lattice.geometry; }
  Index edge_count() const { return basis->edge_count(); }
  // Fractional edge index whose eigenvalue equals the gap centre.
  double gap_center_index() const;
};

// With `full_spectrum` false only the in-gap window is diagonalised, which
// is all the edge-edge machinery needs.
Reference prepare_reference(const lattice::ModelSpec& model,
                            const spectral::ClassifyOptions& opts = {},
                            bool full_spectrum = false);

// Recipe conventions follow the model: Haldane templates use (-1)^(j+k) and
// the half-sum envelope, quantum-Hall templates (-i)^(j+k) and the full sum.
biphoton::StateRecipe recipe_for(const lattice::ModelSpec& model, double sigma_c, double sigma_a,
                                 int input_edge_length);

struct NamedRecipe {
  std::string name;
  biphoton::StateRecipe recipe;
};

// The five reference states spanning correlated to anti-correlated:
// correlated, semi_correlated, product, semi_anticorrelated, anticorrelated.
std::vector<NamedRecipe> standard_recipes(const lattice::ModelSpec& model, int input_edge_length);

struct PreparedProbe {
  std::string name;
  biphoton::StateRecipe recipe;
  Matrix coefficients;  // normalised clean edge-edge coefficients
  double weight = 0.0;  // projection weight
  double schmidt = 0.0;
};

// Template, projection and Schmidt number without forming N x N matrices.
PreparedProbe prepare_probe(const Reference& ref, const NamedRecipe& recipe);

// Orthonormal basis (columns, in edge-mode coordinates) of the joint range of
// the coefficient matrices; singular values below rel_tol * max are dropped.
Matrix propagation_basis(const std::vector<Matrix>& coefficients, double rel_tol = 1e-12);

// Clean-edge representation of exp(-i H z) acting on the edge modes listed in
// `basis_columns`: returns Phi_E^dagger U Phi_E Q.
Matrix evolved_edge_block(const Reference& ref, const lattice::SparseOperator& h, double z,
                          const Matrix& basis_columns);

struct EnsembleConfig {
  lattice::ModelSpec model = lattice::HaldaneSpec{};
  lattice::DisorderSpec disorder;
  int instances = 20;
  std::uint64_t base_seed = 1;
  std::vector<NamedRecipe> probes;
  double z = 78.5;
  bool sweep_reference = true;
  metrics::SweepOptions sweep;
  spectral::ClassifyOptions classify;
  int workers = 0;  // 0: hardware concurrency
  double max_failure_fraction = 0.01;
};

// Instance i uses seed base_seed XOR i.
std::uint64_t instance_seed(std::uint64_t base, std::uint64_t index);

struct ProbeSummary {
  std::string name;
  PreparedProbe probe;
  RealMatrix average_map;  // mean edge-edge spectral map after propagation
  std::vector<metrics::MetricsRecord> records;
};

struct EnsembleResult {
  std::vector<ProbeSummary> probes;
  std::vector<std::pair<std::uint64_t, std::string>> failures;
  int completed = 0;
};

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const Reference& ref);
EnsembleResult run_ensemble(const EnsembleConfig& cfg);

struct ProtectionWindow {
  Index lo = 0;
  Index hi = 0;
  double threshold = 0.01;

  Index size() const { return hi - lo + 1; }
  double center() const { return 0.5 * static_cast<double>(lo + hi); }
};

// Smallest index square holding every cell >= threshold * max. Empty for an
// all-zero map.
std::optional<ProtectionWindow> extract_window(const RealMatrix& average_map,
                                               double threshold = 0.01);

struct ScanGrid {
  double sigma_min = 0.01;
  double sigma_max = 10.0;
  int points = 25;  // per axis, log-spaced
  int input_edge_length = 20;
  std::optional<double> x0;

  std::vector<double> values() const;
};

struct ScanConfig {
  lattice::ModelSpec model = lattice::HaldaneSpec{};
  lattice::DisorderSpec disorder;
  ScanGrid grid;
  int instances = 1;  // 1: one disorder draw shared by every grid point
  std::uint64_t base_seed = 1;
  double z = 78.5;
  spectral::ClassifyOptions classify;
  int workers = 0;
};

struct ScanCell {
  double sigma_c = 0.0;
  double sigma_a = 0.0;
  bool ok = false;
  double weight = 0.0;
  double schmidt = 0.0;
  double edge_content = 0.0;  // mean over instances
  double edge_content_std = 0.0;
  std::string error;

  double merit() const { return edge_content * schmidt; }
};

struct ScanResult {
  std::vector<double> sigma_c;
  std::vector<double> sigma_a;
  std::vector<ScanCell> cells;  // sigma_c major
  std::vector<std::uint64_t> seeds;

  const ScanCell& at(std::size_t ic, std::size_t ia) const {
    return cells[ic * sigma_a.size() + ia];
  }
};

ScanResult parameter_scan(const ScanConfig& cfg, const Reference& ref);
ScanResult parameter_scan(const ScanConfig& cfg);

struct SizeStudyConfig {
  lattice::HaldaneSpec base;
  std::vector<std::pair<int, int>> sizes{{10, 90}, {20, 90}, {10, 180}};
  lattice::DisorderSpec disorder;
  int instances = 8;
  std::uint64_t base_seed = 1;
  NamedRecipe recipe{"correlated", biphoton::StateRecipe::haldane(5.0, 0.01)};
  double z = 78.5;  // distance for the base (first) size
  // Stretch z with the distance from the input window to the far end of the
  // disordered region, so longer leads still carry the packet through it.
  bool scale_distance = true;
  spectral::ClassifyOptions classify;
  int workers = 0;
};

struct SizeRow {
  int nx = 0;
  int ny = 0;
  Index sites = 0;
  double z = 0.0;
  double mean_edge_content = 0.0;
  double std_edge_content = 0.0;
  int instances = 0;
};

struct SizeStudyResult {
  std::vector<SizeRow> rows;
  double spread = 0.0;    // max - min of the per-size means
  double variance = 0.0;  // variance of the per-size means
};

SizeStudyResult size_study(const SizeStudyConfig& cfg);

// Distance (in hexagon columns) from the input-window centre to the far end
// of the disordered region of a Haldane ribbon.
double transit_length(const lattice::HaldaneSpec& spec);

// Runs fn(i) for i in [0, count) on `workers` threads (0: hardware
// concurrency). Exceptions are rethrown after all workers join.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace twophoton::campaign
