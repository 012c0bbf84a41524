#include <doctest.h>

#include <atomic>
#include <set>
#include <cmath>
#include <stdexcept>

#include "twophoton/campaign.hpp"

using namespace twophoton;
using namespace twophoton::campaign;

namespace {

lattice::HaldaneSpec small_ribbon(int ny = 30) {
  lattice::HaldaneSpec s;
  s.nx = 4;
  s.ny = ny;
  s.input_edge_length = 8;
  s.disordered_length = 6;
  return s;
}

const Reference& shared_reference() {
  static const Reference ref = prepare_reference(small_ribbon());
  return ref;
}

EnsembleConfig small_ensemble(double sigma, int instances) {
  EnsembleConfig cfg;
  cfg.model = small_ribbon();
  cfg.disorder.sigma = sigma;
  cfg.instances = instances;
  cfg.base_seed = 17;
  cfg.probes = {{"product", biphoton::StateRecipe::haldane(3.0, 3.0, 8)},
                {"correlated", biphoton::StateRecipe::haldane(3.0, 0.01, 8)}};
  cfg.z = 20.0;
  cfg.sweep = {18.0, 22.0, 0.5};
  return cfg;
}

}  // namespace

TEST_CASE("instance seeds are base XOR index") {
  CHECK(instance_seed(1, 0) == 1);
  CHECK(instance_seed(1, 1) == 0);
  CHECK(instance_seed(0xF0, 0x0F) == 0xFF);
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) seen.insert(instance_seed(12345, i));
  CHECK(seen.size() == 100);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(200);
  parallel_for(200, 4, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](int i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("windowed reference matches the full-spectrum reference on the edge space") {
  const Reference& win = shared_reference();
  const Reference full = prepare_reference(small_ribbon(), {}, true);
  REQUIRE(win.edge_count() == full.edge_count());
  CHECK(win.edge_count() > 0);
  CHECK((win.basis->edge_values() - full.basis->edge_values()).cwiseAbs().maxCoeff() < 1e-10);
  // Same subspace: the projectors agree.
  const Matrix pw = win.basis->edge_vectors() * win.basis->edge_vectors().adjoint();
  const Matrix pf = full.basis->edge_vectors() * full.basis->edge_vectors().adjoint();
  CHECK((pw - pf).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(win.digest == full.digest);
  const double c = win.gap_center_index();
  CHECK(c >= 0.0);
  CHECK(c <= static_cast<double>(win.edge_count() - 1));
}

TEST_CASE("standard recipes span correlated to anti-correlated") {
  const auto recipes = standard_recipes(lattice::HaldaneSpec{}, 20);
  REQUIRE(recipes.size() == 5);
  CHECK(recipes[0].name == "correlated");
  CHECK(recipes[2].name == "product");
  CHECK(recipes[4].name == "anticorrelated");
  CHECK(recipes[2].recipe.sigma_c == recipes[2].recipe.sigma_a);
  CHECK(recipes[0].recipe.sigma_a < recipes[0].recipe.sigma_c);
  const auto q = standard_recipes(lattice::QheSpec{}, 20);
  CHECK(q[0].recipe.phase == biphoton::PhaseConvention::Quarter);
}

TEST_CASE("clean lattice: edge content stays one and the map is unchanged") {
  const Reference& ref = shared_reference();
  EnsembleConfig cfg = small_ensemble(0.0, 1);
  cfg.sweep_reference = false;
  const EnsembleResult r = run_ensemble(cfg, ref);
  CHECK(r.completed == 1);
  for (const ProbeSummary& p : r.probes) {
    REQUIRE(p.records.size() == 1);
    CHECK(p.records[0].edge_content == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(p.records[0].transmitted_fidelity == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(p.records[0].z_m == 20.0);
    const RealMatrix initial = biphoton::pair_map(p.probe.coefficients);
    CHECK((p.average_map - initial).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("ensembles are deterministic and independent of the worker count") {
  const Reference& ref = shared_reference();
  EnsembleConfig cfg = small_ensemble(1.0, 6);
  cfg.workers = 1;
  const EnsembleResult a = run_ensemble(cfg, ref);
  cfg.workers = 4;
  const EnsembleResult b = run_ensemble(cfg, ref);
  REQUIRE(a.probes.size() == b.probes.size());
  for (std::size_t p = 0; p < a.probes.size(); ++p) {
    REQUIRE(a.probes[p].records.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto& x = a.probes[p].records[i];
      const auto& y = b.probes[p].records[i];
      CHECK(x.seed == instance_seed(17, i));
      CHECK(x.seed == y.seed);
      CHECK(x.edge_content == doctest::Approx(y.edge_content).epsilon(1e-12));
      CHECK(x.fidelity == doctest::Approx(y.fidelity).epsilon(1e-12));
      CHECK(x.z_m == y.z_m);
      CHECK(x.edge_content <= 1.0 + 1e-10);
      CHECK(x.fidelity <= x.edge_content + 1e-10);
    }
    CHECK((a.probes[p].average_map - b.probes[p].average_map).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Disorder actually does something.
  CHECK(a.probes[0].records[0].edge_content < 1.0 - 1e-6);
}

TEST_CASE("reduced-basis ensemble agrees with dense propagation of each probe") {
  const Reference& ref = shared_reference();
  EnsembleConfig cfg = small_ensemble(0.8, 1);
  cfg.sweep_reference = false;
  const EnsembleResult r = run_ensemble(cfg, ref);
  lattice::DisorderSpec d = cfg.disorder;
  d.seed = instance_seed(cfg.base_seed, 0);
  const HermitianOperator h = lattice::apply_disorder(ref.lattice.hamiltonian, ref.geometry(), d);
  const Index ne = ref.edge_count();
  const Matrix g = evolved_edge_block(ref, h.sparse(), cfg.z, Matrix::Identity(ne, ne));
  for (const ProbeSummary& p : r.probes) {
    const Matrix final_c = g * p.probe.coefficients * g.transpose();
    CHECK(p.records[0].edge_content == doctest::Approx(final_c.squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("propagation basis rank") {
  const Reference& ref = shared_reference();
  const PreparedProbe a = prepare_probe(ref, {"a", biphoton::StateRecipe::haldane(3.0, 3.0, 8)});
  const PreparedProbe b = prepare_probe(ref, {"b", biphoton::StateRecipe::haldane(3.0, 0.01, 8)});
  const Matrix q = propagation_basis({a.coefficients, b.coefficients});
  CHECK(q.cols() <= 8);
  CHECK((q.adjoint() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff() < 1e-12);
  // Q spans the column space of each coefficient matrix.
  CHECK((q * (q.adjoint() * a.coefficients) - a.coefficients).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((q * (q.adjoint() * b.coefficients) - b.coefficients).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.schmidt == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(b.schmidt > 1.5);
  CHECK(propagation_basis({a.coefficients}).cols() == 1);
}

TEST_CASE("window extraction") {
  RealMatrix one_hot = RealMatrix::Zero(10, 10);
  one_hot(3, 3) = 1.0;
  auto w = extract_window(one_hot, 0.01);
  REQUIRE(w.has_value());
  CHECK(w->lo == 3);
  CHECK(w->hi == 3);
  CHECK(w->size() == 1);

  RealMatrix map = RealMatrix::Zero(10, 10);
  map(2, 5) = 1.0;
  map(4, 7) = 0.02;
  map(0, 9) = 0.005;
  w = extract_window(map, 0.01);
  REQUIRE(w.has_value());
  CHECK(w->lo == 2);
  CHECK(w->hi == 7);
  CHECK(w->center() == 4.5);
  w = extract_window(map, 1.0);
  CHECK(w->lo == 2);
  CHECK(w->hi == 5);
  CHECK_FALSE(extract_window(RealMatrix::Zero(4, 4)).has_value());
  CHECK_THROWS_AS(extract_window(map, 0.0), ConfigError);
  CHECK_THROWS_AS(extract_window(map, 1.5), ConfigError);
}

TEST_CASE("scan grid and scan cells") {
  ScanGrid grid;
  grid.sigma_min = 0.01;
  grid.sigma_max = 10.0;
  grid.points = 4;
  const std::vector<double> v = grid.values();
  REQUIRE(v.size() == 4);
  CHECK(v[0] == doctest::Approx(0.01));
  CHECK(v[1] == doctest::Approx(0.1));
  CHECK(v[3] == doctest::Approx(10.0));
  grid.points = 0;
  CHECK_THROWS_AS(grid.values(), ConfigError);

  ScanConfig cfg;
  cfg.model = small_ribbon();
  cfg.grid = {0.5, 4.0, 3, 8, std::nullopt};
  cfg.disorder.sigma = 0.5;
  cfg.instances = 2;
  cfg.z = 15.0;
  const ScanResult r = parameter_scan(cfg, shared_reference());
  REQUIRE(r.cells.size() == 9);
  CHECK(r.seeds.size() == 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const ScanCell& diag = r.at(i, i);
    CHECK(diag.ok);
    CHECK(diag.schmidt == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(diag.sigma_c == diag.sigma_a);
  }
  for (const ScanCell& c : r.cells) {
    CHECK(c.ok);
    CHECK(c.edge_content > 0.0);
    CHECK(c.edge_content <= 1.0 + 1e-10);
    CHECK(c.merit() == doctest::Approx(c.edge_content * c.schmidt));
  }
}

TEST_CASE("transit length and a clean size study") {
  lattice::HaldaneSpec s;
  CHECK(transit_length(s) == doctest::Approx(35 + 20 - 9.5));
  SizeStudyConfig cfg;
  cfg.base = small_ribbon();
  cfg.sizes = {{4, 30}, {5, 30}, {4, 40}};
  cfg.disorder.sigma = 0.0;
  cfg.instances = 1;
  cfg.recipe = {"correlated", biphoton::StateRecipe::haldane(3.0, 0.01, 8)};
  cfg.z = 10.0;
  const SizeStudyResult r = size_study(cfg);
  REQUIRE(r.rows.size() == 3);
  for (const SizeRow& row : r.rows) CHECK(row.mean_edge_content == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.rows[1].z == doctest::Approx(10.0));
  CHECK(r.rows[2].z > 10.0);
  CHECK(r.spread < 1e-10);
}

TEST_CASE("ensemble input validation") {
  EnsembleConfig cfg = small_ensemble(1.0, 0);
  CHECK_THROWS_AS(run_ensemble(cfg, shared_reference()), ConfigError);
  cfg.instances = 1;
  cfg.probes.clear();
  CHECK_THROWS_AS(run_ensemble(cfg, shared_reference()), ConfigError);
}
