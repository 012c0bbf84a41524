#include "twophoton/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twophoton::biphoton {

BiphotonState::BiphotonState(Matrix psi) {
  if (psi.rows() != psi.cols()) throw ConfigError("state", "amplitude matrix must be square");
  psi_ = 0.5 * (psi + psi.transpose());
}

BiphotonState BiphotonState::product(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ConfigError("state", "factor dimensions differ");
  return BiphotonState(a * b.transpose());
}

BiphotonState BiphotonState::pair(Index dim, Index j, Index k) {
  if (j < 0 || k < 0 || j >= dim || k >= dim) throw ConfigError("state", "site out of range");
  Matrix psi = Matrix::Zero(dim, dim);
  if (j == k) {
    psi(j, j) = 1.0;
  } else {
    psi(j, k) = std::sqrt(0.5);
    psi(k, j) = std::sqrt(0.5);
  }
  return BiphotonState(std::move(psi));
}

double BiphotonState::symmetry_defect() const {
  if (psi_.size() == 0) return 0.0;
  return (psi_ - psi_.transpose()).cwiseAbs().maxCoeff();
}

BiphotonState BiphotonState::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("state has zero or non-finite norm");
  BiphotonState out;
  out.psi_ = psi_ / n;
  return out;
}

void StateRecipe::validate(Index edge_capacity) const {
  if (!(sigma_c > 0.0) || !std::isfinite(sigma_c)) {
    throw ConfigError("sigma_c", "must be positive and finite");
  }
  if (!(sigma_a > 0.0) || !std::isfinite(sigma_a)) {
    throw ConfigError("sigma_a", "must be positive and finite");
  }
  if (input_edge_length < 1 || input_edge_length > edge_capacity) {
    throw ConfigError("input_edge_length",
                      "must lie in [1, " + std::to_string(edge_capacity) + "]");
  }
  if (x0 && !std::isfinite(*x0)) throw ConfigError("x0", "must be finite");
}

StateRecipe StateRecipe::haldane(double sigma_c, double sigma_a, int input_edge_length) {
  return StateRecipe{sigma_c, sigma_a, input_edge_length, std::nullopt,
                     PhaseConvention::Alternating, Envelope::HalfSum};
}

StateRecipe StateRecipe::qhe(double sigma_c, double sigma_a, int input_edge_length) {
  return StateRecipe{sigma_c, sigma_a, input_edge_length, std::nullopt, PhaseConvention::Quarter,
                     Envelope::FullSum};
}

namespace {

Complex phase_factor(PhaseConvention phase, int power) {
  if (phase == PhaseConvention::Alternating) return power % 2 == 0 ? 1.0 : -1.0;
  switch (power % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

}  // namespace

Matrix template_block(const StateRecipe& recipe, Index edge_capacity) {
  recipe.validate(edge_capacity);
  const int me = recipe.input_edge_length;
  const double x0 = recipe.center();
  const double ca = 1.0 / (4.0 * recipe.sigma_a * recipe.sigma_a);
  const double cc = 1.0 / (recipe.sigma_c * recipe.sigma_c);
  RealMatrix exponent(me, me);
  for (int j = 1; j <= me; ++j) {
    for (int k = 1; k <= me; ++k) {
      const double rel = j - k;
      const double sum = recipe.envelope == Envelope::HalfSum ? 0.5 * (j + k) : double(j + k);
      exponent(j - 1, k - 1) = -ca * rel * rel - cc * (x0 - sum) * (x0 - sum);
    }
  }
  const double shift = exponent.maxCoeff();
  Matrix block(me, me);
  for (int j = 1; j <= me; ++j) {
    for (int k = 1; k <= me; ++k) {
      block(j - 1, k - 1) = phase_factor(recipe.phase, j + k) * std::exp(exponent(j - 1, k - 1) - shift);
    }
  }
  return block / block.norm();
}

BiphotonState template_state(const StateRecipe& recipe, const lattice::LatticeGeometry& geom) {
  const Matrix block = template_block(recipe, static_cast<Index>(geom.input_edge.size()));
  Matrix psi = Matrix::Zero(geom.size(), geom.size());
  for (Index j = 0; j < block.rows(); ++j) {
    for (Index k = 0; k < block.cols(); ++k) {
      psi(geom.input_edge[static_cast<std::size_t>(j)], geom.input_edge[static_cast<std::size_t>(k)]) =
          block(j, k);
    }
  }
  return BiphotonState(std::move(psi));
}

TwoPhotonEigenbasis::TwoPhotonEigenbasis(std::shared_ptr<const spectral::EigenSystem> single)
    : single_(std::move(single)) {
  if (!single_) throw ConfigError("basis", "missing single-photon eigensystem");
  if (static_cast<Index>(single_->labels.size()) != single_->size()) {
    throw ConfigError("basis", "eigensystem is not classified");
  }
  edge_ = single_->transport_edge();
  is_edge_.assign(static_cast<std::size_t>(modes()), false);
  for (Index n : edge_) is_edge_[static_cast<std::size_t>(n)] = true;
  edge_vectors_ = single_->columns(edge_);
}

PairLabel TwoPhotonEigenbasis::label(Index m, Index n) const {
  const int edges = int(is_edge_.at(static_cast<std::size_t>(m))) +
                    int(is_edge_.at(static_cast<std::size_t>(n)));
  return edges == 2 ? PairLabel::EdgeEdge : edges == 1 ? PairLabel::BulkEdge : PairLabel::BulkBulk;
}

RealVector TwoPhotonEigenbasis::pair_eigenvalues() const {
  RealVector out(pair_count());
  Index p = 0;
  for (Index m = 0; m < modes(); ++m) {
    for (Index n = m; n < modes(); ++n) out(p++) = eigenvalue(m, n);
  }
  return out;
}

RealVector TwoPhotonEigenbasis::edge_values() const {
  RealVector out(edge_count());
  for (Index k = 0; k < edge_count(); ++k) out(k) = single_->values(edge_[static_cast<std::size_t>(k)]);
  return out;
}

BiphotonState TwoPhotonEigenbasis::pair_state(Index m, Index n) const {
  const Vector& a = single_->vectors.col(m);
  const Vector& b = single_->vectors.col(n);
  if (m == n) return BiphotonState(a * a.transpose());
  return BiphotonState(std::sqrt(0.5) * (a * b.transpose() + b * a.transpose()));
}

Matrix edge_coefficients(const BiphotonState& state, const TwoPhotonEigenbasis& basis) {
  if (state.dim() != basis.dim()) throw ConfigError("state", "dimension differs from basis");
  const Matrix& phi = basis.edge_vectors();
  return phi.adjoint() * state.amplitudes() * phi.conjugate();
}

Matrix edge_coefficients(const Matrix& block, const std::vector<Index>& sites,
                         const TwoPhotonEigenbasis& basis) {
  if (block.rows() != static_cast<Index>(sites.size()) || block.cols() != block.rows()) {
    throw ConfigError("state", "block and site list sizes differ");
  }
  const Matrix& phi = basis.edge_vectors();
  Matrix rows(block.rows(), phi.cols());
  for (std::size_t k = 0; k < sites.size(); ++k) rows.row(static_cast<Index>(k)) = phi.row(sites[k]);
  return rows.adjoint() * block * rows.conjugate();
}

BiphotonState synthesize(const Matrix& coefficients, const TwoPhotonEigenbasis& basis) {
  const Matrix& phi = basis.edge_vectors();
  return BiphotonState(phi * coefficients * phi.transpose());
}

Projection project_edge_edge(const BiphotonState& state, const TwoPhotonEigenbasis& basis,
                             double min_weight) {
  Matrix c = edge_coefficients(state, basis);
  const double weight = c.squaredNorm();
  if (!(weight >= min_weight) || weight == 0.0) {
    throw NumericalError("edge-edge projection weight " + std::to_string(weight) +
                         " is below tolerance");
  }
  c /= std::sqrt(weight);
  Projection p;
  p.state = synthesize(c, basis);
  p.coefficients = std::move(c);
  p.weight = weight;
  return p;
}

RealMatrix pair_map(const Matrix& coefficients) {
  const Index m = coefficients.rows();
  RealMatrix s = RealMatrix::Zero(m, m);
  for (Index a = 0; a < m; ++a) {
    s(a, a) = std::norm(coefficients(a, a));
    for (Index b = a + 1; b < m; ++b) {
      // <phi2_ab|psi> = (C_ab + C_ba) / sqrt(2)
      s(a, b) = 0.5 * std::norm(coefficients(a, b) + coefficients(b, a));
    }
  }
  return s;
}

RealMatrix spectral_map(const BiphotonState& state, const TwoPhotonEigenbasis& basis) {
  if (state.dim() != basis.dim()) throw ConfigError("state", "dimension differs from basis");
  const Matrix& phi = basis.single().vectors;
  return pair_map(phi.adjoint() * state.amplitudes() * phi.conjugate());
}

RealMatrix spatial_map(const BiphotonState& state) { return state.amplitudes().cwiseAbs2(); }

ReducedDensity reduced_density(const BiphotonState& state) {
  ReducedDensity r;
  r.rho = state.amplitudes() * state.amplitudes().adjoint();
  r.diagonal = r.rho.diagonal().real();
  return r;
}

double schmidt_number(const Matrix& amplitudes) {
  // Restrict to rows and columns that carry amplitude; the nonzero singular
  // values are unchanged and templates touch only M_e sites.
  std::vector<Index> rows;
  std::vector<Index> cols;
  for (Index i = 0; i < amplitudes.rows(); ++i) {
    if (amplitudes.row(i).cwiseAbs().maxCoeff() > 0.0) rows.push_back(i);
  }
  for (Index j = 0; j < amplitudes.cols(); ++j) {
    if (amplitudes.col(j).cwiseAbs().maxCoeff() > 0.0) cols.push_back(j);
  }
  if (rows.empty()) throw NumericalError("Schmidt number of a zero state");
  Matrix a(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      a(static_cast<Index>(r), static_cast<Index>(c)) = amplitudes(rows[r], cols[c]);
    }
  }
  // sum p_i^2 = tr(rho^2) / tr(rho)^2 with rho = a a^dagger.
  const Matrix gram = a.rows() <= a.cols() ? Matrix(a * a.adjoint()) : Matrix(a.adjoint() * a);
  const double trace = gram.trace().real();
  return trace * trace / gram.squaredNorm();
}

double schmidt_number(const BiphotonState& state) { return schmidt_number(state.amplitudes()); }

}  // namespace twophoton::biphoton
