#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "twophoton/lattice.hpp"
#include "twophoton/spectral.hpp"
#include "twophoton/types.hpp"

namespace twophoton::biphoton {

// Pure two-photon state stored as the full symmetric amplitude matrix
// psi(j, k) over sites, so that |psi> = sum_jk psi(j, k) |j, k>.
class BiphotonState {
 public:
  BiphotonState() = default;
  // Symmetrises (psi + psi^T) / 2; does not normalise.
  explicit BiphotonState(Matrix psi);

  static BiphotonState product(const Vector& a, const Vector& b);
  // (|j,k> + |k,j>) / sqrt(2), or |j,j> when j == k.
  static BiphotonState pair(Index dim, Index j, Index k);

  const Matrix& amplitudes() const noexcept { return psi_; }
  Index dim() const noexcept { return psi_.rows(); }
  double norm() const { return psi_.norm(); }
  double symmetry_defect() const;
  // Throws NumericalError when the norm is zero or not finite.
  BiphotonState normalized() const;

 private:
  Matrix psi_;
};

enum class PhaseConvention : std::uint8_t { Alternating, Quarter };  // (-1)^(j+k), (-i)^(j+k)
enum class Envelope : std::uint8_t { HalfSum, FullSum };  // (x0 - (j+k)/2)^2, (x0 - (j+k))^2

struct StateRecipe {
  double sigma_c = 1.0;
  double sigma_a = 1.0;
  int input_edge_length = 20;
  std::optional<double> x0;  // defaults to (M_e + 1) / 2
  PhaseConvention phase = PhaseConvention::Alternating;
  Envelope envelope = Envelope::HalfSum;

  double center() const { return x0.value_or(0.5 * (input_edge_length + 1)); }
  void validate(Index edge_capacity) const;

  static StateRecipe haldane(double sigma_c, double sigma_a, int input_edge_length = 20);
  static StateRecipe qhe(double sigma_c, double sigma_a, int input_edge_length = 20);
};

// Normalised M_e x M_e amplitude block over the input window (j, k = 1..M_e).
// Exponents are shifted by their maximum, so very narrow widths stay finite.
Matrix template_block(const StateRecipe& recipe, Index edge_capacity);

// The template block placed on the input-edge sites of `geom`.
BiphotonState template_state(const StateRecipe& recipe, const lattice::LatticeGeometry& geom);

enum class PairLabel : std::uint8_t { EdgeEdge, BulkEdge, BulkBulk };

// Symmetric products of single-photon modes. Pair (m, n), m <= n, has
// eigenvalue lambda_m + lambda_n and is labelled from the two mode labels.
class TwoPhotonEigenbasis {
 public:
  explicit TwoPhotonEigenbasis(std::shared_ptr<const spectral::EigenSystem> single);

  const spectral::EigenSystem& single() const noexcept { return *single_; }
  Index modes() const noexcept { return single_->size(); }
  Index dim() const noexcept { return single_->dim(); }
  Index pair_count() const noexcept { return modes() * (modes() + 1) / 2; }

  double eigenvalue(Index m, Index n) const { return single_->values(m) + single_->values(n); }
  PairLabel label(Index m, Index n) const;
  // All pair eigenvalues, ordered (0,0), (0,1), ..., (0,M-1), (1,1), ...
  RealVector pair_eigenvalues() const;

  // Transport edge modes (ascending eigenvalue) and their vectors.
  const std::vector<Index>& edge() const noexcept { return edge_; }
  Index edge_count() const noexcept { return static_cast<Index>(edge_.size()); }
  const Matrix& edge_vectors() const noexcept { return edge_vectors_; }
  RealVector edge_values() const;

  BiphotonState pair_state(Index m, Index n) const;

 private:
  std::shared_ptr<const spectral::EigenSystem> single_;
  std::vector<bool> is_edge_;
  std::vector<Index> edge_;
  Matrix edge_vectors_;
};

// Edge-edge coefficients: psi restricted to E x E equals Phi_E C Phi_E^T
// with C = Phi_E^dagger psi conj(Phi_E).
Matrix edge_coefficients(const BiphotonState& state, const TwoPhotonEigenbasis& basis);
// Same for a state supported on `sites` only, given as its block there.
Matrix edge_coefficients(const Matrix& block, const std::vector<Index>& sites,
                         const TwoPhotonEigenbasis& basis);
BiphotonState synthesize(const Matrix& coefficients, const TwoPhotonEigenbasis& basis);

struct Projection {
  BiphotonState state;
  Matrix coefficients;  // normalised edge-edge coefficients
  double weight = 0.0;  // |A|^2, the norm^2 before renormalisation
};

// Drops the B x E and B x B components and renormalises. Throws
// NumericalError when the retained weight is below `min_weight`.
Projection project_edge_edge(const BiphotonState& state, const TwoPhotonEigenbasis& basis,
                             double min_weight = 1e-12);

// Upper-triangular map of |<phi2_mn|psi>|^2 over every pair of modes.
RealMatrix spectral_map(const BiphotonState& state, const TwoPhotonEigenbasis& basis);
// Same map from coefficients in any mode basis (C = Phi^dagger psi conj(Phi)).
RealMatrix pair_map(const Matrix& coefficients);

RealMatrix spatial_map(const BiphotonState& state);

struct ReducedDensity {
  Matrix rho;
  RealVector diagonal;  // R(n)
};
ReducedDensity reduced_density(const BiphotonState& state);

// 1 / sum_i p_i^2 over normalised squared singular values.
double schmidt_number(const BiphotonState& state);
double schmidt_number(const Matrix& amplitudes);

}  // namespace twophoton::biphoton
