#include "twophoton/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twophoton::evolve {

double Propagator::unitarity_defect() const {
  if (u.size() == 0) return 0.0;
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

Propagator single_propagator(const spectral::EigenSystem& es, double z,
                             std::string source_digest) {
  if (!es.complete || es.size() != es.dim()) {
    throw ConfigError("propagator", "needs the complete spectrum");
  }
  const Vector phases = (-kI * z * es.values.cast<Complex>()).array().exp();
  Propagator p;
  p.u = es.vectors * phases.asDiagonal() * es.vectors.adjoint();
  p.source_digest = std::move(source_digest);
  p.z = z;
  return p;
}

biphoton::BiphotonState propagate_biphoton(const biphoton::BiphotonState& state,
                                           const Propagator& u) {
  if (state.dim() != u.u.rows()) throw ConfigError("state", "dimension differs from propagator");
  return biphoton::BiphotonState(u.u * state.amplitudes() * u.u.transpose());
}

Matrix evolve_columns(const spectral::EigenSystem& es, const Matrix& x, double z) {
  if (!es.complete || es.size() != es.dim()) {
    throw ConfigError("propagator", "needs the complete spectrum");
  }
  const Vector phases = (-kI * z * es.values.cast<Complex>()).array().exp();
  return es.vectors * (phases.asDiagonal() * (es.vectors.adjoint() * x));
}

biphoton::BiphotonState propagate_schedule(const biphoton::BiphotonState& state,
                                           const std::vector<Segment>& schedule) {
  if (schedule.empty()) throw ConfigError("schedule", "must contain at least one segment");
  Matrix psi = state.amplitudes();
  for (const Segment& s : schedule) {
    if (s.system == nullptr) throw ConfigError("schedule", "segment without eigensystem");
    // U psi U^T = (U (U psi)^T)^T, and psi stays symmetric.
    const Matrix half = evolve_columns(*s.system, psi, s.z);
    psi = evolve_columns(*s.system, half.transpose(), s.z);
  }
  return biphoton::BiphotonState(std::move(psi));
}

std::vector<double> bessel_j_sequence(int n, double x) {
  if (n < 0) throw ConfigError("order", "must be non-negative");
  std::vector<double> j(static_cast<std::size_t>(n) + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  const double ax = std::abs(x);
  // Start well above both n and |x| so the minimal solution dominates.
  int start = std::max(n, static_cast<int>(ax)) + 40 + static_cast<int>(10.0 * std::cbrt(ax));
  start += start % 2;
  std::vector<double> t(static_cast<std::size_t>(start) + 2, 0.0);
  t[static_cast<std::size_t>(start)] = 1e-300;
  double norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const auto kk = static_cast<std::size_t>(k);
    t[kk - 1] = (2.0 * k / ax) * t[kk] - t[kk + 1];
    if (std::abs(t[kk - 1]) > 1e250) {
      for (std::size_t i = kk - 1; i <= static_cast<std::size_t>(start); ++i) t[i] *= 1e-250;
    }
  }
  norm = t[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * t[static_cast<std::size_t>(k)];
  for (int k = 0; k <= n; ++k) {
    double v = t[static_cast<std::size_t>(k)] / norm;
    if (x < 0.0 && k % 2 == 1) v = -v;
    j[static_cast<std::size_t>(k)] = v;
  }
  return j;
}

SpectralBounds gershgorin_bounds(const lattice::SparseOperator& h) {
  SpectralBounds b{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
  for (Index i = 0; i < h.outerSize(); ++i) {
    double center = 0.0;
    double radius = 0.0;
    for (lattice::SparseOperator::InnerIterator it(h, i); it; ++it) {
      if (it.col() == i) {
        center = it.value().real();
      } else {
        radius += std::abs(it.value());
      }
    }
    b.lower = std::min(b.lower, center - radius);
    b.upper = std::max(b.upper, center + radius);
  }
  if (h.outerSize() == 0) b = {0.0, 0.0};
  return b;
}

Matrix evolve_columns(const lattice::SparseOperator& h, const Matrix& x, double z,
                      double tolerance) {
  if (h.rows() != x.rows()) throw ConfigError("state", "dimension differs from operator");
  const SpectralBounds b = gershgorin_bounds(h);
  const double half_width = 0.5 * (b.upper - b.lower);
  const double mid = 0.5 * (b.upper + b.lower);
  const Complex global = std::exp(-kI * (mid * z));
  if (half_width == 0.0 || z == 0.0) return global * x;

  const double arg = half_width * z;
  const int order = static_cast<int>(std::abs(arg) + 30.0 + 10.0 * std::cbrt(std::abs(arg)));
  const std::vector<double> bessel = bessel_j_sequence(order, arg);
  int last = order;
  while (last > 0 && std::abs(bessel[static_cast<std::size_t>(last)]) < tolerance) --last;

  lattice::SparseOperator identity(h.rows(), h.cols());
  identity.setIdentity();
  const lattice::SparseOperator scaled = (h - Complex(mid) * identity) / Complex(half_width);

  // exp(-i a z s) = J_0(az) + 2 sum_k (-i)^k J_k(az) T_k(s)
  Matrix prev = x;
  Matrix curr = scaled * x;
  Matrix out = bessel[0] * prev + (2.0 * bessel[1] * Complex(0.0, -1.0)) * curr;
  Complex phase(0.0, -1.0);
  for (int k = 2; k <= last; ++k) {
    Matrix next = 2.0 * (scaled * curr) - prev;
    phase *= Complex(0.0, -1.0);
    out.noalias() += (2.0 * bessel[static_cast<std::size_t>(k)]) * phase * next;
    prev.swap(curr);
    curr.swap(next);
  }
  return global * out;
}

double two_photon_energy(const biphoton::BiphotonState& state, const HermitianOperator& h) {
  const Matrix& psi = state.amplitudes();
  const Matrix action = h.matrix() * psi + psi * h.matrix().transpose();
  return (psi.conjugate().cwiseProduct(action)).sum().real();
}

}  // namespace twophoton::evolve
