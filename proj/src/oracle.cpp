#include "twophoton/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "twophoton/campaign.hpp"
#include "twophoton/evolve.hpp"

namespace twophoton::oracle {

void PerturbationCase::validate() const {
  const Index m = modes();
  if (v.rows() != m || v.cols() != m) throw ConfigError("perturbation", "V size differs from mode count");
  for (Index k : {ni, mi, nf, mf}) {
    if (k < 0 || k >= m) throw ConfigError("perturbation", "mode index out of range");
  }
  if ((v - v.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
    throw ConfigError("perturbation", "V is not Hermitian");
  }
}

PerturbationCase PerturbationCase::from_sites(const spectral::EigenSystem& es, const Matrix& site_v,
                                              Index ni, Index mi, Index nf, Index mf) {
  PerturbationCase c;
  c.lambda = es.values;
  c.v = es.vectors.adjoint() * site_v * es.vectors;
  c.v = 0.5 * (c.v + c.v.adjoint()).eval();
  c.ni = ni;
  c.mi = mi;
  c.nf = nf;
  c.mf = mf;
  c.validate();
  return c;
}

SumResult second_order_sum(const PerturbationCase& c, double degeneracy_tol) {
  c.validate();
  const Index m = c.modes();
  const Matrix id = Matrix::Identity(m, m);
  const Matrix v2 = Eigen::kroneckerProduct(c.v, id).eval() + Eigen::kroneckerProduct(id, c.v).eval();
  const Index i = c.ni * m + c.mi;
  const Index f = c.nf * m + c.mf;
  const double ei = c.initial_energy();
  SumResult r{Complex(0.0), 0};
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) {
      const double denom = ei - (c.lambda(a) + c.lambda(b));
      if (std::abs(denom) < degeneracy_tol) {
        ++r.excluded;
        continue;
      }
      const Index j = a * m + b;
      r.value += v2(f, j) * v2(j, i) / denom;
    }
  }
  return r;
}

Complex second_order_closed(const PerturbationCase& c, double tol) {
  c.validate();
  if (c.nf == c.ni || c.mf == c.mi) {
    throw NumericalError("closed form needs both photons to change mode");
  }
  const double dn = c.lambda(c.ni) - c.lambda(c.nf);
  const double dm = c.lambda(c.mi) - c.lambda(c.mf);
  if (std::abs(dn) < tol || std::abs(dm) < tol) {
    throw NumericalError("degenerate single-photon transition");
  }
  // Intermediates |n_f, m_i> and |n_i, m_f>.
  return c.v(c.nf, c.ni) * c.v(c.mf, c.mi) * (1.0 / dn + 1.0 / dm);
}

namespace {

// Columns are the symmetric basis states in vec(psi) = psi(j, k) at j*M + k.
RealMatrix symmetric_isometry(Index m) {
  RealMatrix s = RealMatrix::Zero(m * m, m * (m + 1) / 2);
  Index col = 0;
  for (Index a = 0; a < m; ++a) {
    for (Index b = a; b < m; ++b, ++col) {
      if (a == b) {
        s(a * m + a, col) = 1.0;
      } else {
        s(a * m + b, col) = std::sqrt(0.5);
        s(b * m + a, col) = std::sqrt(0.5);
      }
    }
  }
  return s;
}

Matrix symmetric_h2(const Matrix& h, const RealMatrix& s) {
  const Index m = h.rows();
  const Matrix id = Matrix::Identity(m, m);
  const Matrix h2 = Eigen::kroneckerProduct(h, id).eval() + Eigen::kroneckerProduct(id, h).eval();
  return s.cast<Complex>().transpose() * h2 * s.cast<Complex>();
}

// Same operator as symmetric_h2, built column by column from
// H2 vec(psi) = vec(h psi + psi h^T) without forming the M^2 x M^2 matrix.
Matrix symmetric_h2_direct(const Matrix& h) {
  const Index m = h.rows();
  const Index n = m * (m + 1) / 2;
  const double r = std::sqrt(0.5);
  auto weight = [r](Index a, Index b) { return a == b ? 1.0 : r; };
  Matrix out(n, n);
  Index col = 0;
  for (Index c = 0; c < m; ++c) {
    for (Index d = c; d < m; ++d, ++col) {
      // psi = r (e_c e_d^T + e_d e_c^T) off the diagonal, e_c e_c^T on it.
      Matrix img = Matrix::Zero(m, m);
      const double w = weight(c, d);
      if (c == d) {
        img.col(c) += w * h.col(c);
        img.row(c) += w * h.col(c).transpose();
      } else {
        img.col(d) += w * h.col(c);
        img.col(c) += w * h.col(d);
        img.row(c) += w * h.col(d).transpose();
        img.row(d) += w * h.col(c).transpose();
      }
      Index row = 0;
      for (Index a = 0; a < m; ++a) {
        for (Index b = a; b < m; ++b, ++row) {
          out(row, col) = a == b ? img(a, a) : r * (img(a, b) + img(b, a));
        }
      }
    }
  }
  return out;
}

Vector vec(const Matrix& psi) {
  Vector out(psi.size());
  for (Index j = 0; j < psi.rows(); ++j) {
    for (Index k = 0; k < psi.cols(); ++k) out(j * psi.cols() + k) = psi(j, k);
  }
  return out;
}

}  // namespace

biphoton::BiphotonState brute_force_biphoton_evolution(const lattice::HermitianOperator& h,
                                                       const biphoton::BiphotonState& state,
                                                       double z) {
  const Index m = h.dim();
  if (m > kBruteForceMaxSites) {
    throw ConfigError("sites", "brute-force evolution is limited to " +
                                   std::to_string(kBruteForceMaxSites) + " sites");
  }
  if (state.dim() != m) throw ConfigError("state", "dimension differs from Hamiltonian");
  const RealMatrix s = symmetric_isometry(m);
  const Matrix hs = symmetric_h2(h.matrix(), s);
  const Matrix u = (Complex(0.0, -z) * hs).exp();
  const Vector out = s.cast<Complex>() * (u * (s.cast<Complex>().transpose() * vec(state.amplitudes())));
  Matrix psi(m, m);
  for (Index j = 0; j < m; ++j) {
    for (Index k = 0; k < m; ++k) psi(j, k) = out(j * m + k);
  }
  return biphoton::BiphotonState(std::move(psi));
}

double additivity_defect(const lattice::HermitianOperator& h) {
  const Index m = h.dim();
  if (m > kBruteForceMaxSites) throw ConfigError("sites", "additivity check is limited to 64 sites");
  Eigen::SelfAdjointEigenSolver<Matrix> two(symmetric_h2_direct(h.matrix()), Eigen::EigenvaluesOnly);
  const spectral::EigenSystem one = spectral::diagonalize(h);
  std::vector<double> sums;
  for (Index a = 0; a < m; ++a) {
    for (Index b = a; b < m; ++b) sums.push_back(one.values(a) + one.values(b));
  }
  std::sort(sums.begin(), sums.end());
  double defect = 0.0;
  for (std::size_t k = 0; k < sums.size(); ++k) {
    defect = std::max(defect, std::abs(two.eigenvalues()(static_cast<Index>(k)) - sums[k]));
  }
  return defect;
}

std::vector<std::pair<std::string, lattice::ModelSpec>> default_verify_lattices() {
  auto haldane = [](int nx, int ny) {
    lattice::HaldaneSpec s;
    s.nx = nx;
    s.ny = ny;
    s.input_edge_length = 1;
    s.disordered_length = ny;
    return s;
  };
  auto qhe = [](int nx, int ny) {
    lattice::QheSpec s;
    s.nx = nx;
    s.ny = ny;
    s.input_edge_length = 1;
    s.disordered_length = ny;
    return s;
  };
  return {{"haldane_1x1", haldane(1, 1)},
          {"haldane_1x2", haldane(1, 2)},
          {"haldane_2x2", haldane(2, 2)},
          {"qhe_2x4", qhe(2, 4)},
          {"qhe_4x4", qhe(4, 4)}};
}

namespace {

int share(int total, std::size_t parts, std::size_t index) {
  const int base = total / static_cast<int>(parts);
  return base + (static_cast<int>(index) < total % static_cast<int>(parts) ? 1 : 0);
}

LatticeReport verify_lattice(const VerifyConfig& cfg, const std::string& name,
                             const lattice::ModelSpec& model, std::uint64_t seed, int conserving,
                             int generic, int evolution) {
  const lattice::Lattice lat = lattice::build(model);
  const spectral::EigenSystem es = spectral::diagonalize(lat.hamiltonian);
  const Index m = es.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, m - 1);
  constexpr int kMaxAttempts = 100000;

  LatticeReport rep;
  rep.name = name;
  rep.sites = m;
  rep.max_additivity_defect = additivity_defect(lat.hamiltonian);

  auto random_site_v = [&] {
    Matrix v = Matrix::Zero(m, m);
    for (Index k = 0; k < m; ++k) v(k, k) = normal(rng);
    return v;
  };

  // Energies snapped to a dyadic grid so the constructed degeneracy is exact.
  const double grid = std::ldexp(1.0, -20);
  for (int done = 0, attempts = 0; done < conserving; ++attempts) {
    if (attempts > kMaxAttempts) throw NumericalError(name + ": cannot build conserving cases");
    const Index ni = pick(rng), mi = pick(rng), nf = pick(rng), mf = pick(rng);
    if (nf == ni || mf == mi || mf == ni || mf == nf) continue;
    PerturbationCase c = PerturbationCase::from_sites(es, random_site_v(), ni, mi, nf, mf);
    for (Index k = 0; k < m; ++k) c.lambda(k) = std::round(c.lambda(k) / grid) * grid;
    c.lambda(mf) = c.lambda(ni) + c.lambda(mi) - c.lambda(nf);
    if (std::abs(c.lambda(ni) - c.lambda(nf)) < cfg.min_denominator) continue;
    const SumResult s = second_order_sum(c);
    rep.max_conserving_closed = std::max(rep.max_conserving_closed, std::abs(second_order_closed(c)));
    rep.max_conserving_sum = std::max(rep.max_conserving_sum, std::abs(s.value));
    rep.excluded_terms += s.excluded;
    ++done;
    ++rep.conserving_cases;
  }

  for (int done = 0, attempts = 0; done < generic; ++attempts) {
    if (attempts > kMaxAttempts) throw NumericalError(name + ": cannot build generic cases");
    const Index ni = pick(rng), mi = pick(rng), nf = pick(rng), mf = pick(rng);
    if (nf == ni || mf == mi) continue;
    if (std::abs(es.values(ni) - es.values(nf)) < cfg.min_denominator ||
        std::abs(es.values(mi) - es.values(mf)) < cfg.min_denominator) {
      continue;
    }
    const PerturbationCase c = PerturbationCase::from_sites(es, random_site_v(), ni, mi, nf, mf);
    const SumResult s = second_order_sum(c);
    rep.max_generic_difference =
        std::max(rep.max_generic_difference, std::abs(s.value - second_order_closed(c)));
    rep.excluded_terms += s.excluded;
    ++done;
    ++rep.generic_cases;
  }

  if (m <= kBruteForceMaxSites) {
    for (int k = 0; k < evolution; ++k) {
      Matrix psi(m, m);
      for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) psi(a, b) = Complex(normal(rng), normal(rng));
      }
      const biphoton::BiphotonState state = biphoton::BiphotonState(psi).normalized();
      for (double z : cfg.distances) {
        const Matrix factorized =
            evolve::propagate_biphoton(state, evolve::single_propagator(es, z)).amplitudes();
        const Matrix direct = brute_force_biphoton_evolution(lat.hamiltonian, state, z).amplitudes();
        rep.max_evolution_difference =
            std::max(rep.max_evolution_difference, (factorized - direct).cwiseAbs().maxCoeff());
        ++rep.evolution_cases;
      }
    }
  }
  return rep;
}

}  // namespace

VerifyReport verify(const VerifyConfig& cfg,
                    const std::vector<std::pair<std::string, lattice::ModelSpec>>& lattices) {
  if (lattices.empty()) throw ConfigError("lattices", "no verification lattices");
  if (cfg.conserving_cases < 0 || cfg.generic_cases < 0 || cfg.evolution_states < 0) {
    throw ConfigError("cases", "case counts must be non-negative");
  }
  VerifyReport report;
  report.lattices.resize(lattices.size());
  campaign::parallel_for(static_cast<int>(lattices.size()), cfg.workers, [&](int k) {
    const auto idx = static_cast<std::size_t>(k);
    report.lattices[idx] = verify_lattice(
        cfg, lattices[idx].first, lattices[idx].second, cfg.seed ^ static_cast<std::uint64_t>(k),
        share(cfg.conserving_cases, lattices.size(), idx), share(cfg.generic_cases, lattices.size(), idx),
        share(cfg.evolution_states, lattices.size(), idx));
  });
  for (const LatticeReport& r : report.lattices) {
    report.conserving_cases += r.conserving_cases;
    report.generic_cases += r.generic_cases;
    report.evolution_cases += r.evolution_cases;
    report.excluded_terms += r.excluded_terms;
    report.max_conserving = std::max({report.max_conserving, r.max_conserving_closed, r.max_conserving_sum});
    report.max_generic_difference = std::max(report.max_generic_difference, r.max_generic_difference);
    report.max_evolution_difference = std::max(report.max_evolution_difference, r.max_evolution_difference);
    report.max_additivity_defect = std::max(report.max_additivity_defect, r.max_additivity_defect);
  }
  return report;
}

}  // namespace twophoton::oracle
