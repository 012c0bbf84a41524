#include "twophoton/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <Eigen/SVD>

#include "twophoton/evolve.hpp"

namespace twophoton::campaign {

using biphoton::StateRecipe;
using lattice::HaldaneSpec;
using lattice::ModelSpec;
using lattice::QheSpec;
using spectral::EigenSystem;
using spectral::GapInfo;

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int n = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, count);
  if (n == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t instance_seed(std::uint64_t base, std::uint64_t index) { return base ^ index; }

double Reference::gap_center_index() const {
  const RealVector values = basis->edge_values();
  const double c = gap.center();
  if (values.size() == 0) return 0.0;
  if (c <= values(0)) return 0.0;
  for (Index k = 0; k + 1 < values.size(); ++k) {
    if (c >= values(k) && c < values(k + 1)) {
      return static_cast<double>(k) + (c - values(k)) / (values(k + 1) - values(k));
    }
  }
  return static_cast<double>(values.size() - 1);
}

namespace {

// Keeps the modes that fall strictly inside one of `gaps`.
EigenSystem restrict_to_gaps(const EigenSystem& es, const std::vector<GapInfo>& gaps) {
  std::vector<Index> keep;
  for (Index n = 0; n < es.size(); ++n) {
    for (const GapInfo& g : gaps) {
      if (es.values(n) > g.lower && es.values(n) < g.upper) {
        keep.push_back(n);
        break;
      }
    }
  }
  EigenSystem out;
  out.values.resize(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.values(static_cast<Index>(k)) = es.values(keep[k]);
  out.vectors = es.columns(keep);
  out.complete = false;
  return out;
}

}  // namespace

Reference prepare_reference(const ModelSpec& model, const spectral::ClassifyOptions& opts,
                            bool full_spectrum) {
  lattice::Lattice lat = lattice::build(model);
  std::vector<GapInfo> gaps;
  if (const auto* h = std::get_if<HaldaneSpec>(&model)) {
    gaps.push_back(spectral::bulk_gap(*h));
  } else {
    gaps = spectral::torus_bands(std::get<QheSpec>(model)).gaps;
    if (gaps.empty()) throw NumericalError("quantum Hall torus spectrum has no gap");
  }
  EigenSystem es;
  if (full_spectrum) {
    es = spectral::diagonalize(lat.hamiltonian);
  } else if (gaps.front().gapless()) {
    es.values.resize(0);
    es.vectors.resize(lat.hamiltonian.dim(), 0);
    es.complete = false;
  } else {
    const double lo = gaps.front().lower;
    const double hi = gaps.back().upper;
    es = restrict_to_gaps(spectral::diagonalize_window(lat.hamiltonian, lo, hi), gaps);
  }
  if (std::holds_alternative<HaldaneSpec>(model)) {
    es = spectral::classify_haldane(std::move(es), gaps.front(), lat.geometry, opts);
  } else {
    es = spectral::classify_qhe(std::move(es), gaps, lat.hamiltonian, lat.geometry, opts);
  }

  Reference ref{std::move(lat), {}, gaps, gaps.front(), nullptr, nullptr, {}};
  ref.sparse = ref.lattice.hamiltonian.sparse();
  ref.digest = ref.lattice.hamiltonian.digest();
  auto system = std::make_shared<const EigenSystem>(std::move(es));
  ref.system = system;
  ref.basis = std::make_shared<const biphoton::TwoPhotonEigenbasis>(system);
  return ref;
}

StateRecipe recipe_for(const ModelSpec& model, double sigma_c, double sigma_a,
                       int input_edge_length) {
  return std::holds_alternative<HaldaneSpec>(model)
             ? StateRecipe::haldane(sigma_c, sigma_a, input_edge_length)
             : StateRecipe::qhe(sigma_c, sigma_a, input_edge_length);
}

std::vector<NamedRecipe> standard_recipes(const ModelSpec& model, int input_edge_length) {
  const double wide = std::sqrt(40.0);
  const double narrow = 0.01;
  const std::pair<const char*, std::pair<double, double>> table[] = {
      {"correlated", {wide, narrow}},
      {"semi_correlated", {wide, wide / 3.0}},
      {"product", {wide, wide}},
      {"semi_anticorrelated", {wide / 3.0, wide}},
      {"anticorrelated", {narrow, wide}},
  };
  std::vector<NamedRecipe> out;
  for (const auto& [name, widths] : table) {
    out.push_back({name, recipe_for(model, widths.first, widths.second, input_edge_length)});
  }
  return out;
}

PreparedProbe prepare_probe(const Reference& ref, const NamedRecipe& recipe) {
  const auto& geom = ref.geometry();
  const Matrix block =
      biphoton::template_block(recipe.recipe, static_cast<Index>(geom.input_edge.size()));
  const std::vector<Index> sites(geom.input_edge.begin(),
                                 geom.input_edge.begin() + recipe.recipe.input_edge_length);
  Matrix c = biphoton::edge_coefficients(block, sites, *ref.basis);
  const double weight = c.squaredNorm();
  if (!(weight >= 1e-12)) {
    throw NumericalError("edge-edge projection weight " + std::to_string(weight) +
                         " is below tolerance");
  }
  c /= std::sqrt(weight);
  PreparedProbe p;
  p.name = recipe.name;
  p.recipe = recipe.recipe;
  p.schmidt = biphoton::schmidt_number(c);
  p.coefficients = std::move(c);
  p.weight = weight;
  return p;
}

Matrix propagation_basis(const std::vector<Matrix>& coefficients, double rel_tol) {
  if (coefficients.empty()) throw ConfigError("probes", "no coefficient matrices");
  const Index n = coefficients.front().rows();
  Matrix stacked(n, n * static_cast<Index>(coefficients.size()));
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    stacked.middleCols(static_cast<Index>(k) * n, n) = coefficients[k];
  }
  Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
  const RealVector& s = svd.singularValues();
  Index rank = 0;
  while (rank < s.size() && s(rank) > rel_tol * s(0)) ++rank;
  return svd.matrixU().leftCols(std::max<Index>(rank, 1));
}

Matrix evolved_edge_block(const Reference& ref, const lattice::SparseOperator& h, double z,
                          const Matrix& basis_columns) {
  const Matrix& phi = ref.basis->edge_vectors();
  const Matrix x = phi * basis_columns;
  return phi.adjoint() * evolve::evolve_columns(h, x, z);
}

namespace {

lattice::SparseOperator disordered_operator(const Reference& ref, const lattice::DisorderSpec& d) {
  const RealVector offsets = lattice::disorder_offsets(ref.geometry(), d);
  std::vector<Eigen::Triplet<Complex>> diag;
  for (Index i = 0; i < offsets.size(); ++i) {
    if (offsets(i) != 0.0) diag.emplace_back(i, i, Complex(offsets(i)));
  }
  lattice::SparseOperator shift(ref.sparse.rows(), ref.sparse.cols());
  shift.setFromTriplets(diag.begin(), diag.end());
  return ref.sparse + shift;
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const Reference& ref) {
  if (cfg.instances < 1) throw ConfigError("instances", "must be >= 1");
  if (cfg.probes.empty()) throw ConfigError("probes", "at least one probe recipe is required");
  if (!std::isfinite(cfg.z)) throw ConfigError("z", "must be finite");

  EnsembleResult result;
  std::vector<Matrix> initial;
  for (const NamedRecipe& r : cfg.probes) {
    ProbeSummary s;
    s.name = r.name;
    s.probe = prepare_probe(ref, r);
    initial.push_back(s.probe.coefficients);
    result.probes.push_back(std::move(s));
  }
  const Matrix q = propagation_basis(initial);
  std::vector<Matrix> reduced;
  for (const Matrix& c : initial) reduced.push_back(q.adjoint() * c * q.conjugate());
  const RealVector edge_values = ref.basis->edge_values();

  struct Outcome {
    bool ok = false;
    std::string error;
    std::vector<metrics::MetricsRecord> records;
    std::vector<RealMatrix> maps;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(cfg.instances));

  parallel_for(cfg.instances, cfg.workers, [&](int i) {
    Outcome& out = outcomes[static_cast<std::size_t>(i)];
    lattice::DisorderSpec d = cfg.disorder;
    d.seed = instance_seed(cfg.base_seed, static_cast<std::uint64_t>(i));
    try {
      const lattice::SparseOperator h = disordered_operator(ref, d);
      const Matrix g = evolved_edge_block(ref, h, cfg.z, q);
      for (std::size_t p = 0; p < reduced.size(); ++p) {
        const Matrix final_c = g * reduced[p] * g.transpose();
        metrics::MetricsRecord rec;
        rec.seed = d.seed;
        rec.recipe = result.probes[p].name;
        rec.lattice_hash = ref.digest;
        rec.z_f = cfg.z;
        rec.schmidt_number = result.probes[p].probe.schmidt;
        metrics::SweepOptions sweep = cfg.sweep;
        if (!cfg.sweep_reference) sweep = {cfg.z, cfg.z, 1.0};
        const metrics::SweepResult best =
            metrics::best_reference(final_c, initial[p], edge_values, sweep);
        rec.edge_content = best.edge_content;
        rec.fidelity = best.fidelity;
        rec.transmitted_fidelity = best.transmitted_fidelity;
        rec.z_m = best.z_m;
        out.records.push_back(rec);
        out.maps.push_back(biphoton::pair_map(final_c));
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
      out.records.clear();
      out.maps.clear();
    }
  });

  const Index ne = ref.edge_count();
  for (auto& s : result.probes) s.average_map = RealMatrix::Zero(ne, ne);
  for (int i = 0; i < cfg.instances; ++i) {
    const Outcome& out = outcomes[static_cast<std::size_t>(i)];
    if (!out.ok) {
      result.failures.emplace_back(instance_seed(cfg.base_seed, static_cast<std::uint64_t>(i)),
                                   out.error);
      continue;
    }
    ++result.completed;
    for (std::size_t p = 0; p < result.probes.size(); ++p) {
      result.probes[p].average_map += out.maps[p];
      result.probes[p].records.push_back(out.records[p]);
    }
  }
  if (result.completed > 0) {
    for (auto& s : result.probes) s.average_map /= static_cast<double>(result.completed);
  }
  const double failed = static_cast<double>(result.failures.size());
  if (failed > cfg.max_failure_fraction * cfg.instances) {
    throw NumericalError(std::to_string(result.failures.size()) + " of " +
                         std::to_string(cfg.instances) + " instances failed; first: " +
                         result.failures.front().second);
  }
  return result;
}

EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
  return run_ensemble(cfg, prepare_reference(cfg.model, cfg.classify));
}

std::optional<ProtectionWindow> extract_window(const RealMatrix& average_map, double threshold) {
  if (!(threshold > 0.0) || threshold > 1.0) throw ConfigError("threshold", "must lie in (0, 1]");
  if (average_map.size() == 0) return std::nullopt;
  const double peak = average_map.maxCoeff();
  if (!(peak > 0.0)) return std::nullopt;
  ProtectionWindow w{average_map.rows(), -1, threshold};
  for (Index m = 0; m < average_map.rows(); ++m) {
    for (Index n = 0; n < average_map.cols(); ++n) {
      if (average_map(m, n) >= threshold * peak) {
        w.lo = std::min({w.lo, m, n});
        w.hi = std::max({w.hi, m, n});
      }
    }
  }
  return w;
}

std::vector<double> ScanGrid::values() const {
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min)) {
    throw ConfigError("grid", "needs 0 < sigma_min <= sigma_max");
  }
  if (points < 1) throw ConfigError("grid.points", "must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    v[static_cast<std::size_t>(i)] = sigma_min * std::pow(sigma_max / sigma_min, t);
  }
  return v;
}

ScanResult parameter_scan(const ScanConfig& cfg, const Reference& ref) {
  if (cfg.instances < 1) throw ConfigError("instances", "must be >= 1");
  ScanResult result;
  result.sigma_c = cfg.grid.values();
  result.sigma_a = result.sigma_c;
  const Index ne = ref.edge_count();
  const Matrix identity = Matrix::Identity(ne, ne);

  std::vector<Matrix> blocks(static_cast<std::size_t>(cfg.instances));
  for (int i = 0; i < cfg.instances; ++i) {
    result.seeds.push_back(instance_seed(cfg.base_seed, static_cast<std::uint64_t>(i)));
  }
  parallel_for(cfg.instances, cfg.workers, [&](int i) {
    lattice::DisorderSpec d = cfg.disorder;
    d.seed = result.seeds[static_cast<std::size_t>(i)];
    blocks[static_cast<std::size_t>(i)] =
        evolved_edge_block(ref, disordered_operator(ref, d), cfg.z, identity);
  });

  const std::size_t na = result.sigma_a.size();
  result.cells.resize(result.sigma_c.size() * na);
  parallel_for(static_cast<int>(result.cells.size()), cfg.workers, [&](int idx) {
    const auto k = static_cast<std::size_t>(idx);
    ScanCell& cell = result.cells[k];
    cell.sigma_c = result.sigma_c[k / na];
    cell.sigma_a = result.sigma_a[k % na];
    try {
      StateRecipe r = recipe_for(cfg.model, cell.sigma_c, cell.sigma_a, cfg.grid.input_edge_length);
      r.x0 = cfg.grid.x0;
      const PreparedProbe p = prepare_probe(ref, {"scan", r});
      cell.weight = p.weight;
      cell.schmidt = p.schmidt;
      double sum = 0.0;
      double sum_sq = 0.0;
      for (const Matrix& g : blocks) {
        const double e = (g * p.coefficients * g.transpose()).squaredNorm();
        sum += e;
        sum_sq += e * e;
      }
      const double n = static_cast<double>(blocks.size());
      cell.edge_content = sum / n;
      cell.edge_content_std = std::sqrt(std::max(0.0, sum_sq / n - cell.edge_content * cell.edge_content));
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });
  return result;
}

ScanResult parameter_scan(const ScanConfig& cfg) {
  return parameter_scan(cfg, prepare_reference(cfg.model, cfg.classify));
}

double transit_length(const HaldaneSpec& spec) {
  const double left = (spec.ny - spec.disordered_length) / 2;
  return left + spec.disordered_length - 0.5 * (spec.input_edge_length - 1);
}

SizeStudyResult size_study(const SizeStudyConfig& cfg) {
  if (cfg.sizes.empty()) throw ConfigError("sizes", "at least one lattice size is required");
  SizeStudyResult result;
  double base_transit = 0.0;
  for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
    HaldaneSpec spec = cfg.base;
    spec.nx = cfg.sizes[s].first;
    spec.ny = cfg.sizes[s].second;
    const double transit = transit_length(spec);
    if (s == 0) base_transit = transit;
    EnsembleConfig e;
    e.model = spec;
    e.disorder = cfg.disorder;
    e.instances = cfg.instances;
    e.base_seed = cfg.base_seed;
    e.probes = {cfg.recipe};
    e.z = cfg.scale_distance ? cfg.z * transit / base_transit : cfg.z;
    e.sweep_reference = false;
    e.classify = cfg.classify;
    e.workers = cfg.workers;
    const Reference ref = prepare_reference(spec, cfg.classify);
    const EnsembleResult r = run_ensemble(e, ref);
    SizeRow row;
    row.nx = spec.nx;
    row.ny = spec.ny;
    row.sites = ref.geometry().size();
    row.z = e.z;
    row.instances = r.completed;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& rec : r.probes.front().records) {
      sum += rec.edge_content;
      sum_sq += rec.edge_content * rec.edge_content;
    }
    row.mean_edge_content = sum / r.completed;
    row.std_edge_content =
        std::sqrt(std::max(0.0, sum_sq / r.completed - row.mean_edge_content * row.mean_edge_content));
    result.rows.push_back(row);
  }
  double lo = result.rows.front().mean_edge_content;
  double hi = lo;
  double mean = 0.0;
  for (const auto& row : result.rows) {
    lo = std::min(lo, row.mean_edge_content);
    hi = std::max(hi, row.mean_edge_content);
    mean += row.mean_edge_content;
  }
  mean /= static_cast<double>(result.rows.size());
  for (const auto& row : result.rows) {
    result.variance += (row.mean_edge_content - mean) * (row.mean_edge_content - mean);
  }
  result.variance /= static_cast<double>(result.rows.size());
  result.spread = hi - lo;
  return result;
}

}  // namespace twophoton::campaign
