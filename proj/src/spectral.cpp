#include "twophoton/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "lapack.hpp"

namespace twophoton::spectral {

using lattice::HaldaneSpec;
using lattice::LatticeGeometry;
using lattice::QheSpec;

std::string to_string(ModeLabel label) {
  switch (label) {
    case ModeLabel::Bulk: return "bulk";
    case ModeLabel::Edge: return "edge";
    case ModeLabel::EdgePlus: return "edge+";
    case ModeLabel::EdgeMinus: return "edge-";
  }
  return "unknown";
}

std::vector<Index> EigenSystem::indices(ModeLabel label) const {
  std::vector<Index> out;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] == label) out.push_back(static_cast<Index>(n));
  }
  return out;
}

std::vector<Index> EigenSystem::transport_edge() const {
  std::vector<Index> out;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] == ModeLabel::Edge || labels[n] == ModeLabel::EdgeMinus) {
      out.push_back(static_cast<Index>(n));
    }
  }
  return out;
}

Matrix EigenSystem::columns(const std::vector<Index>& idx) const {
  Matrix out(vectors.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = vectors.col(idx[k]);
  return out;
}

namespace {

void fix_phases(Matrix& v) {
  for (Index n = 0; n < v.cols(); ++n) {
    Index arg = 0;
    v.col(n).cwiseAbs2().maxCoeff(&arg);
    const Complex pivot = v(arg, n);
    if (std::abs(pivot) > 0.0) v.col(n) *= std::conj(pivot) / std::abs(pivot);
  }
}

double sampled_residual(const Matrix& h, const EigenSystem& es) {
  const Index m = es.size();
  if (m == 0) return 0.0;
  const Index samples = std::min<Index>(m, 48);
  double worst = 0.0;
  for (Index s = 0; s < samples; ++s) {
    const Index n = samples == 1 ? 0 : s * (m - 1) / (samples - 1);
    const double r = (h * es.vectors.col(n) - es.values(n) * es.vectors.col(n)).norm();
    worst = std::max(worst, r);
  }
  return worst;
}

void finish(EigenSystem& es, const HermitianOperator& h, double tolerance) {
  fix_phases(es.vectors);
  es.labels.assign(static_cast<std::size_t>(es.size()), ModeLabel::Bulk);
  es.edge_weight = RealVector::Zero(es.size());
  const double r = sampled_residual(h.matrix(), es);
  if (!(r <= tolerance)) {
    throw NumericalError("eigensolver residual " + std::to_string(r) + " exceeds tolerance");
  }
}

}  // namespace

EigenSystem diagonalize(const HermitianOperator& h, double residual_tolerance) {
  EigenSystem es;
  es.vectors = h.matrix();
  es.values.resize(h.dim());
  lapack::heevd(es.vectors, es.values);
  es.complete = true;
  finish(es, h, residual_tolerance);
  return es;
}

EigenSystem diagonalize_window(const HermitianOperator& h, double lower, double upper,
                               double residual_tolerance) {
  if (!(lower < upper)) throw ConfigError("window", "lower bound must be below upper bound");
  EigenSystem es;
  lapack::heevr_window(h.matrix(), lower, upper, es.values, es.vectors);
  es.complete = false;
  finish(es, h, residual_tolerance);
  return es;
}

double max_residual(const HermitianOperator& h, const EigenSystem& es) {
  if (es.size() == 0) return 0.0;
  const Matrix r = h.matrix() * es.vectors - es.vectors * es.values.asDiagonal();
  return r.colwise().norm().maxCoeff();
}

double orthonormality_defect(const EigenSystem& es) {
  if (es.size() == 0) return 0.0;
  const Matrix g = es.vectors.adjoint() * es.vectors - Matrix::Identity(es.size(), es.size());
  return g.cwiseAbs().maxCoeff();
}

namespace {

// Grid search over the unit torus of (u, v) followed by a few zoom passes
// around the best point; sign = +1 maximises, -1 minimises.
double torus_extremum(const std::function<double(double, double)>& f, int n, double sign) {
  double best = -std::numeric_limits<double>::infinity();
  double bu = 0.0;
  double bv = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = static_cast<double>(i) / n;
      const double v = static_cast<double>(j) / n;
      const double val = sign * f(u, v);
      if (val > best) {
        best = val;
        bu = u;
        bv = v;
      }
    }
  }
  double h = 1.0 / n;
  for (int level = 0; level < 8; ++level) {
    const double cu = bu;
    const double cv = bv;
    for (int i = -5; i <= 5; ++i) {
      for (int j = -5; j <= 5; ++j) {
        const double u = cu + i * h / 5.0;
        const double v = cv + j * h / 5.0;
        const double val = sign * f(u, v);
        if (val > best) {
          best = val;
          bu = u;
          bv = v;
        }
      }
    }
    h /= 5.0;
  }
  return sign * best;
}

BandStructure assemble(std::vector<double> lo, std::vector<double> hi) {
  BandStructure b;
  b.band_min = std::move(lo);
  b.band_max = std::move(hi);
  for (std::size_t k = 0; k + 1 < b.band_min.size(); ++k) {
    const GapInfo g{b.band_max[k], b.band_min[k + 1]};
    if (g.width() > 1e-6) b.gaps.push_back(g);
  }
  return b;
}

}  // namespace

BandStructure torus_bands(const HaldaneSpec& spec, int k_points) {
  const double two_pi = 2.0 * std::numbers::pi;
  // Fractional momenta along the two primitive vectors; the three
  // next-nearest-neighbour vectors are a1, a2 - a1 and -a2.
  auto bands = [&spec, two_pi](double u, double v, double sign) {
    const Complex f = spec.kappa1 * (1.0 + std::exp(kI * (two_pi * u)) +
                                     std::exp(kI * (two_pi * v)));
    const double a = two_pi * u;
    const double b = two_pi * (v - u);
    const double c = -two_pi * v;
    const double d0 = 2.0 * spec.t2 * std::cos(spec.phase) * (std::cos(a) + std::cos(b) + std::cos(c));
    const double dz = 2.0 * spec.t2 * std::sin(spec.phase) * (std::sin(a) + std::sin(b) + std::sin(c));
    return spec.beta + d0 + sign * std::sqrt(std::norm(f) + dz * dz);
  };
  auto lower = [&](double u, double v) { return bands(u, v, -1.0); };
  auto upper = [&](double u, double v) { return bands(u, v, +1.0); };
  const int n = std::max(6, k_points - k_points % 6);
  std::vector<double> lo{torus_extremum(lower, n, -1.0), torus_extremum(upper, n, -1.0)};
  std::vector<double> hi{torus_extremum(lower, n, +1.0), torus_extremum(upper, n, +1.0)};
  return assemble(std::move(lo), std::move(hi));
}

namespace {

int flux_period(double flux) {
  const double p = flux / (2.0 * std::numbers::pi);
  for (int q = 1; q <= 64; ++q) {
    if (std::abs(p * q - std::round(p * q)) < 1e-9) return q;
  }
  throw ConfigError("flux", "flux / 2pi must be rational with denominator <= 64");
}

}  // namespace

BandStructure torus_bands(const QheSpec& spec, int k_points) {
  const int q = flux_period(spec.flux);
  const double two_pi = 2.0 * std::numbers::pi;
  // Magnetic cell of q columns; u is k_x / 2pi across rows, v the Bloch
  // phase per cell along the columns.
  auto bloch = [&spec, q, two_pi](double u, double v) {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(q, q);
    for (int m = 0; m < q; ++m) {
      h(m, m) += 2.0 * spec.kappa * std::cos(two_pi * u - spec.flux * (m + 1));
      const int next = (m + 1) % q;
      const Complex t = m == q - 1 ? spec.kappa * std::exp(kI * (two_pi * v)) : Complex(spec.kappa);
      h(m, next) += t;
      h(next, m) += std::conj(t);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    return Eigen::VectorXd(solver.eigenvalues());
  };
  const int n = std::max(8, k_points);
  std::vector<double> lo(static_cast<std::size_t>(q));
  std::vector<double> hi(static_cast<std::size_t>(q));
  for (int b = 0; b < q; ++b) {
    auto band = [&bloch, b](double u, double v) { return bloch(u, v)(b); };
    lo[static_cast<std::size_t>(b)] = torus_extremum(band, n, -1.0);
    hi[static_cast<std::size_t>(b)] = torus_extremum(band, n, +1.0);
  }
  return assemble(std::move(lo), std::move(hi));
}

GapInfo bulk_gap(const HaldaneSpec& spec) {
  const BandStructure b = torus_bands(spec);
  return GapInfo{b.band_max[0], std::max(b.band_max[0], b.band_min[1])};
}

GapInfo bulk_gap(const QheSpec& spec) {
  const BandStructure b = torus_bands(spec);
  if (b.gaps.empty()) throw NumericalError("quantum Hall torus spectrum has no gap");
  return b.gaps.front();
}

double haldane_dirac_gap(const HaldaneSpec& spec) {
  return 6.0 * std::sqrt(3.0) * spec.t2 * std::abs(std::sin(spec.phase));
}

RealVector boundary_weight(const EigenSystem& es, const LatticeGeometry& geom, int depth) {
  if (es.dim() != geom.size()) {
    throw ConfigError("geometry", "eigenvector and geometry dimensions differ");
  }
  RealVector w = RealVector::Zero(es.size());
  for (Index i = 0; i < geom.size(); ++i) {
    if (geom.sites[static_cast<std::size_t>(i)].edge_depth > depth) continue;
    w += es.vectors.row(i).cwiseAbs2().transpose();
  }
  return w;
}

namespace {

bool inside(double lambda, const GapInfo& gap, double margin) {
  return lambda > gap.lower + margin && lambda < gap.upper - margin;
}

double circulation_sparse(const lattice::SparseOperator& h, const LatticeGeometry& geom,
                          const Vector& mode) {
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& s : geom.sites) {
    cx += s.x;
    cy += s.y;
  }
  cx /= static_cast<double>(geom.size());
  cy /= static_cast<double>(geom.size());
  double total = 0.0;
  for (Index i = 0; i < h.outerSize(); ++i) {
    for (lattice::SparseOperator::InnerIterator it(h, i); it; ++it) {
      const Index j = it.col();
      if (j <= i) continue;
      // Probability current flowing from j into i.
      const double current = 2.0 * std::imag(std::conj(mode(i)) * it.value() * mode(j));
      const auto& si = geom.sites[static_cast<std::size_t>(i)];
      const auto& sj = geom.sites[static_cast<std::size_t>(j)];
      const double mx = 0.5 * (si.x + sj.x) - cx;
      const double my = 0.5 * (si.y + sj.y) - cy;
      const double dx = si.x - sj.x;
      const double dy = si.y - sj.y;
      total += current * (mx * dy - my * dx);
    }
  }
  return total;
}

}  // namespace

EigenSystem classify_haldane(EigenSystem es, const GapInfo& gap, const LatticeGeometry& geom,
                             const ClassifyOptions& opts) {
  es.edge_weight = boundary_weight(es, geom, opts.boundary_depth);
  es.labels.assign(static_cast<std::size_t>(es.size()), ModeLabel::Bulk);
  if (gap.gapless()) return es;
  for (Index n = 0; n < es.size(); ++n) {
    if (inside(es.values(n), gap, opts.gap_margin) && es.edge_weight(n) >= opts.min_edge_weight) {
      es.labels[static_cast<std::size_t>(n)] = ModeLabel::Edge;
    }
  }
  return es;
}

double circulation(const HermitianOperator& h, const LatticeGeometry& geom, const Vector& mode) {
  return circulation_sparse(h.sparse(), geom, mode);
}

EigenSystem classify_qhe(EigenSystem es, const std::vector<GapInfo>& gaps,
                         const HermitianOperator& h, const LatticeGeometry& geom,
                         const ClassifyOptions& opts) {
  es.edge_weight = boundary_weight(es, geom, opts.boundary_depth);
  es.labels.assign(static_cast<std::size_t>(es.size()), ModeLabel::Bulk);
  const lattice::SparseOperator sh = h.sparse();
  for (Index n = 0; n < es.size(); ++n) {
    const bool in_gap = std::any_of(gaps.begin(), gaps.end(), [&](const GapInfo& g) {
      return !g.gapless() && inside(es.values(n), g, opts.gap_margin);
    });
    if (!in_gap || es.edge_weight(n) < opts.min_edge_weight) continue;
    const double c = circulation_sparse(sh, geom, es.vectors.col(n));
    if (std::abs(c) < opts.min_circulation) continue;
    const bool transport = (c > 0.0) == (opts.transport_circulation > 0);
    es.labels[static_cast<std::size_t>(n)] = transport ? ModeLabel::EdgeMinus : ModeLabel::EdgePlus;
  }
  return es;
}

void write_spectrum_csv(std::ostream& out, const EigenSystem& es) {
  const auto old_precision = out.precision(17);
  out << "index,lambda,label,edge_weight\n";
  for (Index n = 0; n < es.size(); ++n) {
    const auto k = static_cast<std::size_t>(n);
    out << n << ',' << es.values(n) << ',' << to_string(es.labels.at(k)) << ','
        << (es.edge_weight.size() == es.size() ? es.edge_weight(n) : 0.0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace twophoton::spectral
