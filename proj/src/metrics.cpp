#include "twophoton/metrics.hpp"

#include <cmath>
#include <ostream>

namespace twophoton::metrics {

double overlap_squared(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("state", "fidelity between states of different dimension");
  }
  return std::norm(a.conjugate().cwiseProduct(b).sum());
}

double fidelity(const biphoton::BiphotonState& a, const biphoton::BiphotonState& b) {
  return overlap_squared(a.amplitudes(), b.amplitudes());
}

double edge_content(const biphoton::BiphotonState& state,
                    const biphoton::TwoPhotonEigenbasis& basis) {
  return biphoton::edge_coefficients(state, basis).squaredNorm();
}

double transmitted_fidelity(const biphoton::BiphotonState& state,
                            const biphoton::BiphotonState& reference,
                            const biphoton::TwoPhotonEigenbasis& basis, double min_weight) {
  const biphoton::Projection p = biphoton::project_edge_edge(state, basis, min_weight);
  return fidelity(p.state, reference);
}

Matrix clean_coefficients(const Matrix& initial, const RealVector& edge_values, double z) {
  const Vector phase = (-kI * z * edge_values.cast<Complex>()).array().exp();
  return phase.asDiagonal() * initial * phase.asDiagonal();
}

SweepResult best_reference(const Matrix& final_coefficients, const Matrix& initial,
                           const RealVector& edge_values, const SweepOptions& opts) {
  if (!(opts.dz > 0.0) || opts.z_max < opts.z_min) {
    throw ConfigError("z_m", "sweep needs dz > 0 and z_max >= z_min");
  }
  SweepResult best;
  best.edge_content = final_coefficients.squaredNorm();
  best.fidelity = -1.0;
  const auto steps = static_cast<int>(std::floor((opts.z_max - opts.z_min) / opts.dz + 1e-9));
  for (int s = 0; s <= steps; ++s) {
    const double z = opts.z_min + s * opts.dz;
    const double f =
        overlap_squared(clean_coefficients(initial, edge_values, z), final_coefficients);
    if (f > best.fidelity) {
      best.fidelity = f;
      best.z_m = z;
    }
  }
  if (!(best.edge_content > 0.0)) {
    throw NumericalError("transmitted fidelity undefined: no edge-edge content");
  }
  best.transmitted_fidelity = best.fidelity / best.edge_content;
  return best;
}

void write_metrics_header(std::ostream& out) {
  out << "seed,recipe,lattice_hash,z_f,z_m,F,F_N,E,S_N\n";
}

void write_metrics_row(std::ostream& out, const MetricsRecord& r) {
  const auto old_precision = out.precision(17);
  out << r.seed << ',' << r.recipe << ',' << r.lattice_hash << ',' << r.z_f << ',' << r.z_m << ','
      << r.fidelity << ',' << r.transmitted_fidelity << ',' << r.edge_content << ','
      << r.schmidt_number << '\n';
  out.precision(old_precision);
}

}  // namespace twophoton::metrics
