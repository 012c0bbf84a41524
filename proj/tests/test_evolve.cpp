#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "twophoton/evolve.hpp"
#include "twophoton/oracle.hpp"

using namespace twophoton;
using namespace twophoton::evolve;
using biphoton::BiphotonState;

namespace {

HermitianOperator chain(int n, double beta = 0.0) {
  Matrix h = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    h(i, i + 1) = 1.0;
    h(i + 1, i) = 1.0;
  }
  h(0, 0) = beta;
  return HermitianOperator(h);
}

lattice::Lattice small_haldane() {
  lattice::HaldaneSpec s;
  s.nx = 2;
  s.ny = 6;
  s.input_edge_length = 4;
  s.disordered_length = 2;
  return lattice::build_haldane(s);
}

Matrix random_symmetric(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
  m = (m + m.transpose()).eval();
  return m / m.norm();
}

}  // namespace

TEST_CASE("propagator at zero distance is the identity") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const Propagator p = single_propagator(es, 0.0);
  CHECK((p.u - Matrix::Identity(es.dim(), es.dim())).cwiseAbs().maxCoeff() < 1e-12);
  const BiphotonState psi(random_symmetric(es.dim(), 1));
  CHECK((propagate_biphoton(psi, p).amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigenstates and pair eigenstates only acquire a phase") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const double z = 3.7;
  const Propagator p = single_propagator(es, z);
  CHECK(p.unitarity_defect() < 1e-12);
  for (Index n : {Index{0}, Index{5}, es.size() - 1}) {
    const Vector v = p.u * es.vectors.col(n);
    CHECK((v - std::exp(-kI * es.values(n) * z) * es.vectors.col(n)).norm() < 1e-12);
  }
  const Vector a = es.vectors.col(2);
  const Vector b = es.vectors.col(9);
  const BiphotonState pair(std::sqrt(0.5) * (a * b.transpose() + b * a.transpose()));
  const BiphotonState out = propagate_biphoton(pair, p);
  const Complex phase = std::exp(-kI * (es.values(2) + es.values(9)) * z);
  CHECK((out.amplitudes() - phase * pair.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-site coupler transfers a photon at z = pi/2") {
  const HermitianOperator h = chain(2);
  const spectral::EigenSystem es = spectral::diagonalize(h);
  const Propagator p = single_propagator(es, std::numbers::pi / 2);
  CHECK(std::abs(p.u(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(p.u(0, 0)) < 1e-12);
  // Hong-Ou-Mandel at the balanced point: |1,1> -> (|2,0> - |0,2>) / sqrt 2 up to phase.
  const Propagator half = single_propagator(es, std::numbers::pi / 4);
  const BiphotonState out = propagate_biphoton(BiphotonState::pair(2, 0, 1), half);
  CHECK(std::abs(out.amplitudes()(0, 1)) < 1e-12);
  CHECK(std::norm(out.amplitudes()(0, 0)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("evolution preserves symmetry, norm and two-photon energy") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const BiphotonState psi(random_symmetric(es.dim(), 2));
  const double e0 = two_photon_energy(psi, lat.hamiltonian);
  for (double z : {0.3, 7.0, 78.5}) {
    const BiphotonState out = propagate_biphoton(psi, single_propagator(es, z));
    CHECK(out.symmetry_defect() < 1e-13);
    CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(two_photon_energy(out, lat.hamiltonian) == doctest::Approx(e0).epsilon(1e-10));
  }
}

TEST_CASE("product states stay products") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vector a(es.dim());
  for (Index i = 0; i < a.size(); ++i) a(i) = Complex(g(rng), g(rng));
  a.normalize();
  const Propagator p = single_propagator(es, 4.2);
  const BiphotonState out = propagate_biphoton(BiphotonState::product(a, a), p);
  const Vector ua = p.u * a;
  CHECK((out.amplitudes() - ua * ua.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(biphoton::schmidt_number(out) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("clean evolution leaves the pair spectral map unchanged") {
  lattice::HaldaneSpec s;
  s.nx = 2;
  s.ny = 6;
  s.input_edge_length = 4;
  s.disordered_length = 2;
  const lattice::Lattice lat = lattice::build_haldane(s);
  auto es = std::make_shared<const spectral::EigenSystem>(spectral::classify_haldane(
      spectral::diagonalize(lat.hamiltonian), spectral::bulk_gap(s), lat.geometry));
  const biphoton::TwoPhotonEigenbasis basis(es);
  const BiphotonState psi(random_symmetric(es->dim(), 4));
  const RealMatrix before = biphoton::spectral_map(psi, basis);
  const RealMatrix after = biphoton::spectral_map(propagate_biphoton(psi, single_propagator(*es, 11.0)), basis);
  CHECK((before - after).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("four-site chain agrees with the symmetric-subspace exponential") {
  const HermitianOperator h = chain(4, 0.3);
  const spectral::EigenSystem es = spectral::diagonalize(h);
  const BiphotonState psi(random_symmetric(4, 5));
  for (double z : {0.1, 1.0, 10.0}) {
    const BiphotonState fast = propagate_biphoton(psi, single_propagator(es, z));
    const BiphotonState ref = oracle::brute_force_biphoton_evolution(h, psi, z);
    CHECK((fast.amplitudes() - ref.amplitudes()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("schedules compose like a group") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const BiphotonState psi(random_symmetric(es.dim(), 6));
  const BiphotonState split = propagate_schedule(psi, {{&es, 1.25}, {&es, 2.5}});
  const BiphotonState whole = propagate_biphoton(psi, single_propagator(es, 3.75));
  CHECK((split.amplitudes() - whole.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
  const BiphotonState back = propagate_schedule(psi, {{&es, 2.0}, {&es, -2.0}});
  CHECK((back.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);

  // Piecewise media: the disorder segment is a different operator.
  lattice::DisorderSpec d;
  d.seed = 7;
  const spectral::EigenSystem rough =
      spectral::diagonalize(lattice::apply_disorder(lat.hamiltonian, lat.geometry, d));
  const BiphotonState piecewise = propagate_schedule(psi, {{&es, 1.0}, {&rough, 1.0}, {&es, 1.0}});
  CHECK(piecewise.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(propagate_schedule(psi, {}), ConfigError);
}

TEST_CASE("Chebyshev propagation matches spectral synthesis") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const Matrix x = random_symmetric(es.dim(), 8).leftCols(5);
  const lattice::SparseOperator sp = lat.hamiltonian.sparse();
  for (double z : {0.0, 0.5, 12.0, 78.5, 450.0}) {
    const Matrix a = evolve_columns(sp, x, z);
    const Matrix b = evolve_columns(es, x, z);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
  lattice::DisorderSpec d;
  d.sigma = 2.0;
  d.seed = 3;
  const HermitianOperator rough = lattice::apply_disorder(lat.hamiltonian, lat.geometry, d);
  const Matrix a = evolve_columns(rough.sparse(), x, 30.0);
  const Matrix b = evolve_columns(spectral::diagonalize(rough), x, 30.0);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Gershgorin bounds enclose the spectrum") {
  const lattice::Lattice lat = small_haldane();
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const SpectralBounds b = gershgorin_bounds(lat.hamiltonian.sparse());
  CHECK(b.lower <= es.values(0));
  CHECK(b.upper >= es.values(es.size() - 1));
}

TEST_CASE("Bessel functions by backward recurrence") {
  // Reference values from 30-digit arbitrary-precision evaluation.
  struct Ref {
    int n;
    double x;
    double value;
  };
  const Ref refs[] = {
      {0, 1.0, 0.76519768655796655},  {1, 1.0, 0.44005058574493352},
      {5, 10.0, -0.23406152818679364}, {30, 10.0, 1.5510960782574670e-12},
      {40, 40.0, 0.1307805452851667},  {100, 80.0, 4.6065530648234774e-6},
  };
  for (const Ref& r : refs) {
    const std::vector<double> j = bessel_j_sequence(r.n, r.x);
    CHECK(j[static_cast<std::size_t>(r.n)] == doctest::Approx(r.value).epsilon(1e-12));
  }
  const std::vector<double> neg = bessel_j_sequence(3, -2.0);
  const std::vector<double> pos = bessel_j_sequence(3, 2.0);
  CHECK(neg[1] == doctest::Approx(-pos[1]));
  CHECK(neg[2] == doctest::Approx(pos[2]));
  CHECK(bessel_j_sequence(4, 0.0)[0] == 1.0);
  CHECK_THROWS_AS(bessel_j_sequence(-1, 1.0), ConfigError);
}
