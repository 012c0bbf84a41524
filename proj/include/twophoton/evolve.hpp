#pragma once

#include <string>
#include <vector>

#include "twophoton/biphoton.hpp"
#include "twophoton/lattice.hpp"
#include "twophoton/spectral.hpp"

namespace twophoton::evolve {

struct Propagator {
  Matrix u;
  std::string source_digest;
  double z = 0.0;

  double unitarity_defect() const;
};

// U(z) = sum_n exp(-i lambda_n z) |phi_n><phi_n|; needs a complete spectrum.
Propagator single_propagator(const spectral::EigenSystem& es, double z,
                             std::string source_digest = {});

// psi' = U psi U^T
biphoton::BiphotonState propagate_biphoton(const biphoton::BiphotonState& state,
                                           const Propagator& u);

struct Segment {
  const spectral::EigenSystem* system = nullptr;
  double z = 0.0;
};

// Applies the segments in order. Throws ConfigError on an empty schedule.
biphoton::BiphotonState propagate_schedule(const biphoton::BiphotonState& state,
                                           const std::vector<Segment>& schedule);

// exp(-i H z) X by spectral synthesis over a complete eigensystem.
Matrix evolve_columns(const spectral::EigenSystem& es, const Matrix& x, double z);

// exp(-i H z) X by a Chebyshev expansion with Bessel coefficients. The
// spectrum is bounded with Gershgorin discs; the series is cut once the
// remaining coefficients drop below `tolerance`.
Matrix evolve_columns(const lattice::SparseOperator& h, const Matrix& x, double z,
                      double tolerance = 1e-15);

// J_0(x) .. J_n(x) by backward recurrence, normalised with
// J_0 + 2 sum_k J_2k = 1.
std::vector<double> bessel_j_sequence(int n, double x);

struct SpectralBounds {
  double lower = 0.0;
  double upper = 0.0;
};
SpectralBounds gershgorin_bounds(const lattice::SparseOperator& h);

// <psi| H (x) 1 + 1 (x) H |psi>
double two_photon_energy(const biphoton::BiphotonState& state, const HermitianOperator& h);

}  // namespace twophoton::evolve
