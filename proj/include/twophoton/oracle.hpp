#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twophoton/biphoton.hpp"
#include "twophoton/lattice.hpp"
#include "twophoton/spectral.hpp"
#include "twophoton/types.hpp"

namespace twophoton::oracle {

// Second-order transition between two-photon product states |n_i, m_i> and
// |n_f, m_f>, with the one-body perturbation given in the mode basis.
struct PerturbationCase {
  RealVector lambda;  // single-photon mode energies
  Matrix v;           // V^(1) in the mode basis, Hermitian
  Index ni = 0;
  Index mi = 0;
  Index nf = 0;
  Index mf = 0;

  Index modes() const { return lambda.size(); }
  double initial_energy() const { return lambda(ni) + lambda(mi); }
  double final_energy() const { return lambda(nf) + lambda(mf); }
  void validate() const;

  // v = Phi^dagger V Phi for a site-basis perturbation.
  static PerturbationCase from_sites(const spectral::EigenSystem& es, const Matrix& site_v,
                                     Index ni, Index mi, Index nf, Index mf);
};

struct SumResult {
  Complex value;
  int excluded = 0;  // intermediates degenerate with the initial state
};

// Explicit sum over every ordered intermediate pair j' using the full
// M^2 x M^2 operator V x I + I x V. Intermediates within `degeneracy_tol` of
// the initial energy are skipped and counted.
SumResult second_order_sum(const PerturbationCase& c, double degeneracy_tol = 1e-9);

// Two-term closed form. Throws NumericalError when either single-photon
// transition is degenerate (|delta lambda| < tol) or leaves a photon in place.
Complex second_order_closed(const PerturbationCase& c, double tol = 1e-9);

// Evolution by exponentiating H x I + I x H on the symmetric subspace.
biphoton::BiphotonState brute_force_biphoton_evolution(const lattice::HermitianOperator& h,
                                                       const biphoton::BiphotonState& state,
                                                       double z);
inline constexpr Index kBruteForceMaxSites = 64;

struct VerifyConfig {
  int conserving_cases = 1000;
  int generic_cases = 1000;
  int evolution_states = 100;
  std::vector<double> distances{0.1, 1.0, 10.0};
  std::uint64_t seed = 1;
  double min_denominator = 1e-3;
  int workers = 0;
};

struct LatticeReport {
  std::string name;
  Index sites = 0;
  int conserving_cases = 0;
  int generic_cases = 0;
  int evolution_cases = 0;
  int excluded_terms = 0;
  double max_conserving_closed = 0.0;   // max |closed form| on conserving cases
  double max_conserving_sum = 0.0;      // max |explicit sum| on conserving cases
  double max_generic_difference = 0.0;  // max |sum - closed| on generic cases
  double max_evolution_difference = 0.0;
  double max_additivity_defect = 0.0;
};

struct VerifyReport {
  std::vector<LatticeReport> lattices;
  int conserving_cases = 0;
  int generic_cases = 0;
  int evolution_cases = 0;
  int excluded_terms = 0;
  double max_conserving = 0.0;
  double max_generic_difference = 0.0;
  double max_evolution_difference = 0.0;
  double max_additivity_defect = 0.0;
};

// Small lattices used by default: Haldane 1x1, 1x2, 2x2 and QHE 2x4, 4x4.
std::vector<std::pair<std::string, lattice::ModelSpec>> default_verify_lattices();

// Two-photon eigenvalue additivity: max |eig(H2) - (lambda_m + lambda_n)|
// with H2 formed explicitly on the symmetric subspace.
double additivity_defect(const lattice::HermitianOperator& h);

VerifyReport verify(const VerifyConfig& cfg,
                    const std::vector<std::pair<std::string, lattice::ModelSpec>>& lattices);

}  // namespace twophoton::oracle
