#include <doctest.h>

#include <cmath>
#include <random>

#include "twophoton/oracle.hpp"

using namespace twophoton;
using namespace twophoton::oracle;

namespace {

Matrix random_hermitian(Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix v(m, m);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = Complex(g(rng), g(rng));
  return 0.5 * (v + v.adjoint());
}

PerturbationCase make_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PerturbationCase c;
  c.lambda.resize(6);
  c.lambda << -2.0, -1.25, -0.5, 0.375, 1.125, 2.5;
  c.v = random_hermitian(6, rng);
  c.ni = 0;
  c.mi = 1;
  c.nf = 3;
  c.mf = 5;
  return c;
}

}  // namespace

TEST_CASE("explicit sum and closed form agree on generic transitions") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PerturbationCase c = make_case(seed);
    const SumResult s = second_order_sum(c);
    const Complex closed = second_order_closed(c);
    CHECK(std::abs(s.value - closed) < 1e-12 * std::max(1.0, std::abs(closed)));
    CHECK(s.excluded == 2);  // the initial pair in both orders
  }
}

TEST_CASE("zero perturbation gives zero amplitude; scaling is quadratic") {
  PerturbationCase c = make_case(3);
  const Complex base = second_order_closed(c);
  c.v *= 2.5;
  CHECK(std::abs(second_order_closed(c) - 6.25 * base) < 1e-12);
  CHECK(std::abs(second_order_sum(c).value - 6.25 * base) < 1e-11);
  c.v.setZero();
  CHECK(second_order_sum(c).value == Complex(0.0));
  CHECK(second_order_closed(c) == Complex(0.0));
}

TEST_CASE("exchanging the two photons leaves the amplitude unchanged") {
  const PerturbationCase c = make_case(4);
  PerturbationCase swapped = c;
  std::swap(swapped.ni, swapped.mi);
  std::swap(swapped.nf, swapped.mf);
  CHECK(std::abs(second_order_closed(swapped) - second_order_closed(c)) < 1e-14);
  CHECK(std::abs(second_order_sum(swapped).value - second_order_sum(c).value) < 1e-13);
}

TEST_CASE("energy-conserving transitions cancel exactly") {
  // Dyadic energies: the denominators are exact and the two terms cancel to 0.
  std::mt19937_64 rng(8);
  PerturbationCase c;
  c.lambda.resize(5);
  c.lambda << -1.5, -0.25, 0.125, 0.5, 1.75;
  // lambda_0 + lambda_4 = lambda_1 + lambda_3 = 0.25
  c.ni = 0;
  c.mi = 4;
  c.nf = 1;
  c.mf = 3;
  for (int trial = 0; trial < 10; ++trial) {
    c.v = random_hermitian(5, rng);
    CHECK(second_order_closed(c) == Complex(0.0));
    CHECK(std::abs(second_order_sum(c).value) < 1e-14);
  }
}

TEST_CASE("degenerate and single-photon transitions are rejected by the closed form") {
  PerturbationCase c = make_case(5);
  c.nf = c.ni;
  CHECK_THROWS_AS(second_order_closed(c), NumericalError);
  c = make_case(5);
  c.lambda(3) = c.lambda(0);
  CHECK_THROWS_AS(second_order_closed(c), NumericalError);
  c = make_case(5);
  c.ni = 6;
  CHECK_THROWS_AS(second_order_sum(c), ConfigError);
  c = make_case(5);
  c.v(0, 1) += 1.0;
  CHECK_THROWS_AS(second_order_sum(c), ConfigError);
}

TEST_CASE("site-basis perturbation on an 8-site QHE lattice") {
  lattice::QheSpec s;
  s.nx = 2;
  s.ny = 4;
  s.input_edge_length = 1;
  s.disordered_length = 4;
  const lattice::Lattice lat = lattice::build_qhe(s);
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  std::mt19937_64 rng(12);
  Matrix site_v = Matrix::Zero(8, 8);
  std::normal_distribution<double> g;
  for (Index i = 0; i < 8; ++i) site_v(i, i) = g(rng);
  const PerturbationCase c = PerturbationCase::from_sites(es, site_v, 0, 2, 5, 7);
  CHECK((c.v - c.v.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  const SumResult sum = second_order_sum(c);
  CHECK(std::abs(sum.value - second_order_closed(c)) < 1e-12);
}

TEST_CASE("brute-force evolution: identity, eigenstate phase, size guard") {
  lattice::HaldaneSpec s;
  s.nx = 1;
  s.ny = 1;
  s.input_edge_length = 1;
  s.disordered_length = 1;
  const lattice::Lattice lat = lattice::build_haldane(s);
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const biphoton::BiphotonState pair = biphoton::BiphotonState::pair(6, 1, 4);
  CHECK((brute_force_biphoton_evolution(lat.hamiltonian, pair, 0.0).amplitudes() - pair.amplitudes())
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  const Vector a = es.vectors.col(0);
  const Vector b = es.vectors.col(3);
  const biphoton::BiphotonState eig(std::sqrt(0.5) * (a * b.transpose() + b * a.transpose()));
  const double z = 2.3;
  const biphoton::BiphotonState out = brute_force_biphoton_evolution(lat.hamiltonian, eig, z);
  const Complex phase = std::exp(-kI * (es.values(0) + es.values(3)) * z);
  CHECK((out.amplitudes() - phase * eig.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(additivity_defect(lat.hamiltonian) < 1e-12);

  lattice::QheSpec big;
  big.nx = 5;
  big.ny = 13;
  big.input_edge_length = 1;
  big.disordered_length = 1;
  const lattice::Lattice huge = lattice::build_qhe(big);
  CHECK_THROWS_AS(brute_force_biphoton_evolution(huge.hamiltonian, biphoton::BiphotonState::pair(65, 0, 1), 1.0),
                  ConfigError);
}

TEST_CASE("reduced verification run passes on the default lattices") {
  VerifyConfig cfg;
  cfg.conserving_cases = 50;
  cfg.generic_cases = 50;
  cfg.evolution_states = 10;
  const VerifyReport r = verify(cfg, default_verify_lattices());
  CHECK(r.lattices.size() == 5);
  CHECK(r.conserving_cases == 50);
  CHECK(r.generic_cases == 50);
  CHECK(r.evolution_cases == 10 * 3);
  CHECK(r.max_conserving <= 1e-12);
  CHECK(r.max_generic_difference <= 1e-10);
  CHECK(r.max_evolution_difference <= 1e-8);
  CHECK(r.max_additivity_defect <= 1e-10);
}
