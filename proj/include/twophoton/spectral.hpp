#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "twophoton/lattice.hpp"
#include "twophoton/types.hpp"

namespace twophoton::spectral {

// EdgePlus / EdgeMinus split the in-gap modes of the quantum-Hall ribbon by
// circulation sign. EdgeMinus is the transport branch, the one the input
// template populates; ClassifyOptions::transport_circulation fixes its sign.
enum class ModeLabel : std::uint8_t { Bulk, Edge, EdgePlus, EdgeMinus };

std::string to_string(ModeLabel label);

struct GapInfo {
  double lower = 0.0;  // top of the band below
  double upper = 0.0;  // bottom of the band above

  double center() const { return 0.5 * (lower + upper); }
  double width() const { return upper - lower; }
  bool gapless(double tolerance = 1e-9) const { return width() <= tolerance; }
};

struct EigenSystem {
  RealVector values;  // ascending
  Matrix vectors;     // column n is |phi_n>
  std::vector<ModeLabel> labels;
  RealVector edge_weight;  // probability within the boundary strip, if classified
  bool complete = true;    // false when only an energy window was computed

  Index size() const { return values.size(); }
  Index dim() const { return vectors.rows(); }
  std::vector<Index> indices(ModeLabel label) const;
  // Modes that form the transport edge space: Edge (Haldane) or EdgeMinus
  // (quantum Hall, where EdgePlus is folded into the bulk).
  std::vector<Index> transport_edge() const;
  Matrix columns(const std::vector<Index>& idx) const;
};

struct ClassifyOptions {
  double gap_margin = 1e-6;
  int boundary_depth = 2;             // strip width used for the localisation guard
  double min_edge_weight = 0.5;       // guard threshold
  double min_circulation = 1e-6;      // |circulation| below this is ambiguous
  // Circulation sign of EdgeMinus. With kappa exp(-i flux (m+1)) hopping the
  // template branch of the lower gap flows clockwise in the (x, y) plane.
  int transport_circulation = -1;
};

// Full spectrum with LAPACK zheevd. Every eigenvector is phase-fixed so that
// its largest component is real and positive. Throws NumericalError if the
// solver fails or a sampled residual exceeds `residual_tolerance`.
EigenSystem diagonalize(const HermitianOperator& h, double residual_tolerance = 1e-10);

// Eigenpairs with lower < lambda <= upper only (zheevr, range 'V').
EigenSystem diagonalize_window(const HermitianOperator& h, double lower, double upper,
                               double residual_tolerance = 1e-10);

// Largest |H v_n - lambda_n v_n| over all modes of `es`.
double max_residual(const HermitianOperator& h, const EigenSystem& es);
// Largest entry of |V^dagger V - I|.
double orthonormality_defect(const EigenSystem& es);

// Band edges of the fully periodic lattice.
struct BandStructure {
  std::vector<double> band_min;
  std::vector<double> band_max;
  std::vector<GapInfo> gaps;  // every positive gap between consecutive bands
};

BandStructure torus_bands(const lattice::HaldaneSpec& spec, int k_points = 600);
// Requires flux / (2 pi) = p / q with q <= 64; the magnetic cell has q sites.
BandStructure torus_bands(const lattice::QheSpec& spec, int k_points = 240);

// Haldane: the single gap around zero (zero width when gapless). Quantum Hall:
// the lowest gap of the torus spectrum.
GapInfo bulk_gap(const lattice::HaldaneSpec& spec);
GapInfo bulk_gap(const lattice::QheSpec& spec);
// Closed-form Haldane gap 6 sqrt(3) t2 |sin phase|, valid while the band
// extrema stay at the Dirac points (t2 below roughly 0.19 at phase pi/2).
double haldane_dirac_gap(const lattice::HaldaneSpec& spec);

// Probability of each mode on sites with edge_depth <= depth.
RealVector boundary_weight(const EigenSystem& es, const lattice::LatticeGeometry& geom,
                           int depth);

EigenSystem classify_haldane(EigenSystem es, const GapInfo& gap,
                             const lattice::LatticeGeometry& geom,
                             const ClassifyOptions& opts = {});

// Bond-current circulation sum_bonds J_ij (r_mid x d_ij) about the lattice
// centre, in the right-handed (x, y) frame; positive for counter-clockwise flow.
double circulation(const HermitianOperator& h, const lattice::LatticeGeometry& geom,
                   const Vector& mode);

// Modes inside any of `gaps` are labelled by circulation sign. Guard and
// ambiguity failures are labelled Bulk.
EigenSystem classify_qhe(EigenSystem es, const std::vector<GapInfo>& gaps,
                         const HermitianOperator& h, const lattice::LatticeGeometry& geom,
                         const ClassifyOptions& opts = {});

// index,lambda,label,edge_weight
void write_spectrum_csv(std::ostream& out, const EigenSystem& es);

}  // namespace twophoton::spectral
