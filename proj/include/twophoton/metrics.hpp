#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "twophoton/biphoton.hpp"

namespace twophoton::metrics {

struct MetricsRecord {
  double fidelity = 0.0;
  double transmitted_fidelity = 0.0;
  double edge_content = 0.0;
  double schmidt_number = 0.0;
  double z_f = 0.0;
  double z_m = 0.0;
  std::uint64_t seed = 0;
  std::string recipe;
  std::string lattice_hash;
};

// |<a|b>|^2 with the flat inner product sum_jk conj(a_jk) b_jk.
double fidelity(const biphoton::BiphotonState& a, const biphoton::BiphotonState& b);
double overlap_squared(const Matrix& a, const Matrix& b);

// Weight inside the clean edge-edge subspace of `basis`.
double edge_content(const biphoton::BiphotonState& state,
                    const biphoton::TwoPhotonEigenbasis& basis);

// Fidelity of the renormalised edge-edge part of `state` against `reference`.
// Throws NumericalError when the state has no edge-edge content.
double transmitted_fidelity(const biphoton::BiphotonState& state,
                            const biphoton::BiphotonState& reference,
                            const biphoton::TwoPhotonEigenbasis& basis, double min_weight = 1e-14);

// Sweep of the reference distance z_m for a state known through its clean
// edge-edge coefficients. The reference is the clean evolution of `initial`
// (normalised edge-edge coefficients) to z_m.
struct SweepOptions {
  double z_min = 70.0;
  double z_max = 80.0;
  double dz = 0.1;
};

struct SweepResult {
  double z_m = 0.0;
  double fidelity = 0.0;
  double transmitted_fidelity = 0.0;
  double edge_content = 0.0;
};

// C_ref(z)_mn = exp(-i (lambda_m + lambda_n) z) C0_mn
Matrix clean_coefficients(const Matrix& initial, const RealVector& edge_values, double z);

// Picks the z_m on the grid that maximises F; ties go to the smallest z_m.
SweepResult best_reference(const Matrix& final_coefficients, const Matrix& initial,
                           const RealVector& edge_values, const SweepOptions& opts = {});

// seed,recipe,lattice_hash,z_f,z_m,F,F_N,E,S_N
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRecord& r);

}  // namespace twophoton::metrics
