#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twophoton/biphoton.hpp"
#include "twophoton/campaign.hpp"
#include "twophoton/evolve.hpp"
#include "twophoton/io.hpp"
#include "twophoton/lattice.hpp"
#include "twophoton/metrics.hpp"
#include "twophoton/oracle.hpp"
#include "twophoton/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace twophoton;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> snapshot_dz;
};

io::RunConfig effective_config(const Options& opt) {
  io::RunConfig cfg = io::load_config(opt.config);
  if (opt.seed) {
    cfg.disorder.seed = *opt.seed;
    cfg.base_seed = *opt.seed;
    cfg.verify.seed = *opt.seed;
  }
  if (opt.workers) {
    if (*opt.workers < 0) throw ConfigError("--workers", "must be >= 0");
    cfg.workers = *opt.workers;
  }
  if (opt.snapshot_dz) {
    if (!(*opt.snapshot_dz >= 0.0) || !std::isfinite(*opt.snapshot_dz)) {
      throw ConfigError("--snapshot-dz", "must be finite and >= 0");
    }
    cfg.propagate.snapshot_dz = *opt.snapshot_dz;
  }
  cfg.verify.workers = cfg.workers;
  return cfg;
}

fs::path out_dir(const Options& opt, const std::string& command) {
  return opt.out.empty() ? fs::path("out") / command : fs::path(opt.out);
}

// Writes `body` to dir/name and records it in the manifest.
template <typename F>
void emit(io::Manifest& m, const std::string& name, F&& body) {
  const fs::path path = m.out_dir() / name;
  {
    std::ofstream out(path);
    if (!out) throw ConfigError("--out", "cannot write " + path.string());
    body(out);
  }
  m.record(name);
}

void emit_array(io::Manifest& m, const std::string& name, const auto& array, const json& meta) {
  io::write_array(m.out_dir() / name, array, meta);
  m.record(name);
  m.record(name + ".json");
}

json recipe_json(const campaign::NamedRecipe& r) {
  json j = {{"name", r.name},
            {"sigma_c", r.recipe.sigma_c},
            {"sigma_a", r.recipe.sigma_a},
            {"input_edge_length", r.recipe.input_edge_length},
            {"x0", r.recipe.center()},
            {"phase", r.recipe.phase == biphoton::PhaseConvention::Alternating ? "alternating" : "quarter"},
            {"envelope", r.recipe.envelope == biphoton::Envelope::HalfSum ? "half_sum" : "full_sum"}};
  return j;
}

json gap_json(const spectral::GapInfo& g) {
  return {{"lower", g.lower}, {"upper", g.upper}, {"center", g.center()}, {"width", g.width()}};
}

std::vector<spectral::GapInfo> clean_gaps(const lattice::ModelSpec& model) {
  if (const auto* h = std::get_if<lattice::HaldaneSpec>(&model)) return {spectral::bulk_gap(*h)};
  return spectral::torus_bands(std::get<lattice::QheSpec>(model)).gaps;
}

int cmd_spectrum(const Options& opt) {
  const io::RunConfig cfg = effective_config(opt);
  io::Manifest man(out_dir(opt, "spectrum"), "spectrum", cfg);
  lattice::Lattice lat = lattice::build(cfg.model);
  man.add_lattice_hash("clean", lat.hamiltonian.digest());
  lattice::HermitianOperator h = lat.hamiltonian;
  if (cfg.disorder_enabled) {
    h = lattice::apply_disorder(lat.hamiltonian, lat.geometry, cfg.disorder);
    man.add_seed(cfg.disorder.seed);
    man.add_lattice_hash("disordered", h.digest());
  }
  const auto gaps = clean_gaps(cfg.model);
  spectral::EigenSystem es = spectral::diagonalize(h);
  if (std::holds_alternative<lattice::HaldaneSpec>(cfg.model)) {
    es = spectral::classify_haldane(std::move(es), gaps.front(), lat.geometry, cfg.classify);
  } else {
    if (gaps.empty()) throw NumericalError("quantum Hall torus spectrum has no gap");
    es = spectral::classify_qhe(std::move(es), gaps, h, lat.geometry, cfg.classify);
  }
  emit(man, "spectrum.csv", [&](std::ostream& o) { spectral::write_spectrum_csv(o, es); });
  emit(man, "geometry.csv", [&](std::ostream& o) { lattice::write_geometry_csv(o, lat.geometry); });

  json report = {{"sites", lat.geometry.size()},
                 {"residual", spectral::max_residual(h, es)},
                 {"hermiticity_defect", h.hermiticity_defect()}};
  json gj = json::array();
  for (const auto& g : gaps) gj.push_back(gap_json(g));
  report["torus_gaps"] = gj;
  if (const auto* hs = std::get_if<lattice::HaldaneSpec>(&cfg.model)) {
    report["dirac_gap"] = spectral::haldane_dirac_gap(*hs);
  }
  json counts = json::object();
  for (auto label : {spectral::ModeLabel::Bulk, spectral::ModeLabel::Edge, spectral::ModeLabel::EdgePlus,
                     spectral::ModeLabel::EdgeMinus}) {
    counts[spectral::to_string(label)] = es.indices(label).size();
  }
  report["mode_counts"] = counts;
  report["transport_edge_modes"] = es.transport_edge().size();
  emit(man, "gap_report.json", [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  man.set("gap_report", report);
  man.write();
  std::cout << report.dump(2) << '\n';
  return kOk;
}

std::vector<campaign::NamedRecipe> recipes_or(const io::RunConfig& cfg,
                                              std::vector<campaign::NamedRecipe> fallback) {
  return cfg.recipes.empty() ? std::move(fallback) : cfg.recipes;
}

int input_edge_length(const lattice::ModelSpec& m) {
  return std::visit([](const auto& s) { return s.input_edge_length; }, m);
}

int cmd_propagate(const Options& opt) {
  const io::RunConfig cfg = effective_config(opt);
  const auto& p = cfg.propagate;
  if (!p.project && !p.allow_unprojected) {
    throw ConfigError("propagate.project", "unprojected propagation requires allow_unprojected");
  }
  io::Manifest man(out_dir(opt, "propagate"), "propagate", cfg);
  const campaign::Reference ref = campaign::prepare_reference(cfg.model, cfg.classify);
  man.add_lattice_hash("clean", ref.digest);

  lattice::SparseOperator h = ref.sparse;
  std::string run_hash = ref.digest;
  if (cfg.disorder_enabled) {
    const lattice::HermitianOperator hd =
        lattice::apply_disorder(ref.lattice.hamiltonian, ref.geometry(), cfg.disorder);
    h = hd.sparse();
    run_hash = hd.digest();
    man.add_seed(cfg.disorder.seed);
    man.add_lattice_hash("disordered", run_hash);
  }

  const auto recipes = recipes_or(cfg, campaign::standard_recipes(cfg.model, input_edge_length(cfg.model)));
  const Matrix& phi = ref.basis->edge_vectors();
  const RealVector edge_values = ref.basis->edge_values();
  const auto& geom = ref.geometry();

  std::vector<double> stops;
  if (p.snapshot_dz > 0.0) {
    for (int k = 1; k * p.snapshot_dz < p.z - 1e-12; ++k) stops.push_back(k * p.snapshot_dz);
  }
  stops.push_back(p.z);

  std::ostringstream table;
  metrics::write_metrics_header(table);
  json summary = json::array();
  for (const auto& recipe : recipes) {
    // State kept as X B X^T with X evolved column by column.
    Matrix x;
    Matrix b;
    Matrix c0;
    double weight = 1.0;
    double schmidt = 0.0;
    if (p.project) {
      const campaign::PreparedProbe probe = campaign::prepare_probe(ref, recipe);
      x = phi;
      b = probe.coefficients;
      c0 = probe.coefficients;
      weight = probe.weight;
      schmidt = probe.schmidt;
    } else {
      const Matrix block = biphoton::template_block(recipe.recipe, static_cast<Index>(geom.input_edge.size()));
      x = Matrix::Zero(geom.size(), block.rows());
      for (Index k = 0; k < block.rows(); ++k) x(geom.input_edge[static_cast<std::size_t>(k)], k) = 1.0;
      b = block;
      c0 = phi.adjoint() * x * b * x.transpose() * phi.conjugate();
      weight = c0.squaredNorm();
      if (!(weight > 0.0)) throw NumericalError("template has no edge-edge content");
      c0 /= std::sqrt(weight);
      schmidt = biphoton::schmidt_number(block);
    }
    const json meta = {{"recipe", recipe_json(recipe)}, {"lattice_hash", ref.digest}};
    emit_array(man, recipe.name + "_initial_coefficients.bin", c0, meta);

    double z_now = 0.0;
    for (std::size_t s = 0; s < stops.size(); ++s) {
      x = evolve::evolve_columns(h, x, stops[s] - z_now);
      z_now = stops[s];
      const Matrix g = phi.adjoint() * x;
      const Matrix final_c = g * b * g.transpose();
      const bool last = s + 1 == stops.size();
      metrics::SweepOptions sweep = {z_now, z_now, 1.0};
      if (last && p.sweep_reference) sweep = p.sweep;
      const metrics::SweepResult best = metrics::best_reference(final_c, c0, edge_values, sweep);
      metrics::MetricsRecord rec;
      rec.seed = cfg.disorder_enabled ? cfg.disorder.seed : 0;
      rec.recipe = recipe.name;
      rec.lattice_hash = run_hash;
      rec.z_f = z_now;
      rec.z_m = best.z_m;
      rec.fidelity = best.fidelity;
      rec.transmitted_fidelity = best.transmitted_fidelity;
      rec.edge_content = best.edge_content;
      rec.schmidt_number = schmidt;
      metrics::write_metrics_row(table, rec);

      const std::string stem = recipe.name + "_z" + std::to_string(s);
      const Matrix psi = x * b * x.transpose();
      const RealVector reduced = psi.rowwise().squaredNorm();
      emit(man, stem + "_R.csv", [&](std::ostream& o) { io::write_vector_csv(o, "R", reduced); });
      emit(man, stem + "_S.csv",
           [&](std::ostream& o) { io::write_matrix_csv(o, biphoton::pair_map(final_c)); });
      json snap = meta;
      snap["z"] = z_now;
      emit_array(man, stem + "_P.bin", RealMatrix(psi.cwiseAbs2()), snap);
      if (last) {
        emit_array(man, recipe.name + "_final_coefficients.bin", final_c, snap);
        summary.push_back({{"recipe", recipe.name}, {"weight", weight}, {"E", rec.edge_content},
                           {"F", rec.fidelity}, {"F_N", rec.transmitted_fidelity}, {"z_m", rec.z_m},
                           {"S_N", schmidt}});
      }
    }
  }
  emit(man, "metrics.csv", [&](std::ostream& o) { o << table.str(); });
  man.set("summary", summary);
  man.write();
  std::cout << table.str();
  return kOk;
}

campaign::EnsembleConfig ensemble_config(const io::RunConfig& cfg,
                                         std::vector<campaign::NamedRecipe> probes) {
  campaign::EnsembleConfig e;
  e.model = cfg.model;
  e.disorder = cfg.disorder;
  e.instances = cfg.instances;
  e.base_seed = cfg.base_seed;
  e.probes = std::move(probes);
  e.z = cfg.propagate.z;
  e.sweep_reference = cfg.propagate.sweep_reference;
  e.sweep = cfg.propagate.sweep;
  e.classify = cfg.classify;
  e.workers = cfg.workers;
  e.max_failure_fraction = cfg.max_failure_fraction;
  return e;
}

int cmd_window(const Options& opt) {
  const io::RunConfig cfg = effective_config(opt);
  io::Manifest man(out_dir(opt, "window"), "window", cfg);
  const auto model = cfg.model;
  const campaign::Reference ref = campaign::prepare_reference(model, cfg.classify);
  man.add_lattice_hash("clean", ref.digest);
  const auto probes = recipes_or(
      cfg, {{"narrow", campaign::recipe_for(model, 0.01, 0.01, input_edge_length(model))}});
  const campaign::EnsembleResult r = campaign::run_ensemble(ensemble_config(cfg, probes), ref);
  for (int i = 0; i < cfg.instances; ++i) {
    man.add_seed(campaign::instance_seed(cfg.base_seed, static_cast<std::uint64_t>(i)));
  }
  emit(man, "metrics.csv", [&](std::ostream& o) {
    metrics::write_metrics_header(o);
    for (const auto& p : r.probes) {
      for (const auto& rec : p.records) metrics::write_metrics_row(o, rec);
    }
  });
  json windows = json::array();
  const double gap_center = ref.gap_center_index();
  for (const auto& p : r.probes) {
    emit(man, p.name + "_average_map.csv", [&](std::ostream& o) { io::write_matrix_csv(o, p.average_map); });
    json w = {{"recipe", p.name}, {"threshold", cfg.window_threshold}, {"edge_count", ref.edge_count()},
              {"gap_center_index", gap_center}};
    if (const auto win = campaign::extract_window(p.average_map, cfg.window_threshold)) {
      w["lo"] = win->lo;
      w["hi"] = win->hi;
      w["size"] = win->size();
      w["center"] = win->center();
      w["strictly_inside"] = win->lo > 0 && win->hi < ref.edge_count() - 1;
      w["center_offset"] = win->center() - gap_center;
    } else {
      w["empty"] = true;
    }
    windows.push_back(w);
  }
  json failures = json::array();
  for (const auto& [seed, what] : r.failures) failures.push_back({{"seed", seed}, {"error", what}});
  const json doc = {{"windows", windows}, {"completed", r.completed}, {"failures", failures}};
  emit(man, "window.json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  man.set("windows", windows);
  man.write();
  std::cout << doc.dump(2) << '\n';
  return kOk;
}

int cmd_scan(const Options& opt) {
  const io::RunConfig cfg = effective_config(opt);
  io::Manifest man(out_dir(opt, "scan"), "scan", cfg);
  campaign::ScanConfig sc;
  sc.model = cfg.model;
  sc.disorder = cfg.disorder;
  if (!cfg.disorder_enabled) sc.disorder.sigma = 0.0;
  sc.grid = cfg.scan_grid;
  sc.instances = cfg.scan_instances;
  sc.base_seed = cfg.base_seed;
  sc.z = cfg.propagate.z;
  sc.classify = cfg.classify;
  sc.workers = cfg.workers;
  const campaign::Reference ref = campaign::prepare_reference(cfg.model, cfg.classify);
  man.add_lattice_hash("clean", ref.digest);
  const campaign::ScanResult r = campaign::parameter_scan(sc, ref);
  for (auto s : r.seeds) man.add_seed(s);
  emit(man, "scan.csv", [&](std::ostream& o) {
    o << "sigma_c,sigma_a,ok,weight,S_N,E,E_std,E_times_S_N,error\n";
    for (const auto& c : r.cells) {
      o << io::format_double(c.sigma_c) << ',' << io::format_double(c.sigma_a) << ',' << int(c.ok) << ','
        << io::format_double(c.weight) << ',' << io::format_double(c.schmidt) << ','
        << io::format_double(c.edge_content) << ',' << io::format_double(c.edge_content_std) << ','
        << io::format_double(c.merit()) << ',' << c.error << '\n';
    }
  });
  man.set("shared_disorder_draw", sc.instances == 1);
  man.write();
  std::cout << "scan: " << r.cells.size() << " cells written to " << man.out_dir().string() << '\n';
  return kOk;
}

int cmd_size_study(const Options& opt) {
  const io::RunConfig cfg = effective_config(opt);
  const auto* base = std::get_if<lattice::HaldaneSpec>(&cfg.model);
  if (!base) throw ConfigError("model.type", "size-study supports the haldane model only");
  io::Manifest man(out_dir(opt, "size-study"), "size-study", cfg);
  campaign::SizeStudyConfig sc;
  sc.base = *base;
  sc.sizes = cfg.sizes;
  sc.disorder = cfg.disorder;
  sc.instances = cfg.instances;
  sc.base_seed = cfg.base_seed;
  if (!cfg.recipes.empty()) sc.recipe = cfg.recipes.front();
  sc.z = cfg.propagate.z;
  sc.scale_distance = cfg.scale_distance;
  sc.classify = cfg.classify;
  sc.workers = cfg.workers;
  const campaign::SizeStudyResult r = campaign::size_study(sc);
  for (int i = 0; i < cfg.instances; ++i) {
    man.add_seed(campaign::instance_seed(cfg.base_seed, static_cast<std::uint64_t>(i)));
  }
  emit(man, "size_study.csv", [&](std::ostream& o) {
    o << "nx,ny,sites,z,instances,E_mean,E_std\n";
    for (const auto& row : r.rows) {
      o << row.nx << ',' << row.ny << ',' << row.sites << ',' << io::format_double(row.z) << ','
        << row.instances << ',' << io::format_double(row.mean_edge_content) << ','
        << io::format_double(row.std_edge_content) << '\n';
    }
  });
  man.set("spread", r.spread);
  man.set("variance", r.variance);
  man.write();
  std::cout << "size-study: spread " << io::format_double(r.spread) << '\n';
  return kOk;
}

int cmd_verify(const Options& opt) {
  const io::RunConfig cfg = effective_config(opt);
  io::Manifest man(out_dir(opt, "verify"), "verify", cfg);
  man.add_seed(cfg.verify.seed);
  const oracle::VerifyReport r = oracle::verify(cfg.verify, oracle::default_verify_lattices());
  json doc = io::to_json(r);
  const bool ok = r.max_conserving <= 1e-10 && r.max_generic_difference <= 1e-10 &&
                  r.max_evolution_difference <= 1e-8 && r.max_additivity_defect <= 1e-12;
  doc["pass"] = ok;
  emit(man, "verify.json", [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  man.set("pass", ok);
  man.write();
  std::cout << doc.dump(2) << '\n';
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-photon transport through disordered topological lattices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version());
  Options opt;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (default out/<command>)");
    sub->add_option("--seed", opt.seed, "override disorder, ensemble and oracle seeds");
    sub->add_option("--workers", opt.workers, "worker threads (0: all cores)");
    sub->add_option("--snapshot-dz", opt.snapshot_dz, "snapshot spacing along z (0: final only)");
    return sub;
  };
  CLI::App* spectrum = add("spectrum", "diagonalise, classify and export the spectrum");
  CLI::App* propagate = add("propagate", "propagate recipe states and export metrics and maps");
  CLI::App* scan = add("scan", "edge-content scan over (sigma_c, sigma_a)");
  CLI::App* window = add("window", "disorder ensemble and protection window");
  CLI::App* verify = add("verify", "brute-force oracle verification");
  CLI::App* size = add("size-study", "edge content versus lattice size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  try {
    if (spectrum->parsed()) return cmd_spectrum(opt);
    if (propagate->parsed()) return cmd_propagate(opt);
    if (scan->parsed()) return cmd_scan(opt);
    if (window->parsed()) return cmd_window(opt);
    if (verify->parsed()) return cmd_verify(opt);
    if (size->parsed()) return cmd_size_study(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
