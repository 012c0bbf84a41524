#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "twophoton/types.hpp"

namespace twophoton::lattice {

enum class Region : std::uint8_t { LeftClean, Disordered, RightClean };
enum class ModelKind : std::uint8_t { Haldane, Qhe };

std::string to_string(Region region);
std::string to_string(ModelKind kind);

struct Site {
  double x = 0.0;  // across the ribbon, increasing from the top edge downwards
  double y = 0.0;  // along the ribbon (long axis), increasing to the right
  int row = 0;     // zigzag chain (Haldane) or n (QHE)
  int column = 0;  // brick column (Haldane) or m (QHE)
  int sublattice = 0;
  int edge_depth = 0;  // rows/columns to the nearest boundary
  Region region = Region::LeftClean;
};

// Site table plus the bookkeeping the rest of the pipeline needs: region
// labels, nearest-neighbour bonds and the ordered input window (j = 1..M_e).
struct LatticeGeometry {
  ModelKind model = ModelKind::Haldane;
  int nx = 0;
  int ny = 0;
  std::vector<Site> sites;
  std::vector<Index> input_edge;
  std::vector<std::pair<Index, Index>> bonds;

  Index size() const { return static_cast<Index>(sites.size()); }
  std::vector<Index> sites_in(Region region) const;
};

using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Dense Hermitian matrix over lattice sites. Construction rejects anything
// that is not exactly square and Hermitian to `tolerance`.
class HermitianOperator {
 public:
  explicit HermitianOperator(Matrix m, double tolerance = 0.0);

  const Matrix& matrix() const noexcept { return m_; }
  Index dim() const noexcept { return m_.rows(); }
  double hermiticity_defect() const;
  SparseOperator sparse() const;
  // SHA-256 over the raw matrix bytes; used to key results to a lattice.
  std::string digest() const;

 private:
  Matrix m_;
};

// Zigzag-edged honeycomb flake of nx hexagon rows by ny hexagon columns.
// Sites are enumerated chain by chain (row-major bricks); the total count is
// haldane_site_count(nx, ny) = 2 (nx*ny + nx + ny).
struct HaldaneSpec {
  int nx = 10;
  int ny = 90;
  double kappa1 = 1.0;
  double t2 = 0.2;
  double phase = std::numbers::pi / 2.0;
  double beta = 0.0;
  int input_edge_length = 20;
  int disordered_length = 20;  // hexagon columns in the middle region
};

// Square lattice with real hopping along rows (y) and kappa*exp(-i flux m)
// between rows, m = 1..ny the column label.
struct QheSpec {
  int nx = 20;
  int ny = 180;
  double kappa = 1.0;
  double flux = std::numbers::pi / 2.0;
  int input_edge_length = 20;
  int disordered_length = 20;  // site columns in the middle region
};

enum class Distribution : std::uint8_t { Normal };

struct DisorderSpec {
  double sigma = 1.0;
  Region region = Region::Disordered;
  std::uint64_t seed = 0;
  Distribution distribution = Distribution::Normal;
};

using ModelSpec = std::variant<HaldaneSpec, QheSpec>;

struct Lattice {
  HermitianOperator hamiltonian;
  LatticeGeometry geometry;
};

constexpr Index haldane_site_count(int nx, int ny) {
  return 2 * (static_cast<Index>(nx) * ny + nx + ny);
}

// Throw ConfigError naming the offending field.
void validate(const HaldaneSpec& spec);
void validate(const QheSpec& spec);

Lattice build_haldane(const HaldaneSpec& spec);
Lattice build_qhe(const QheSpec& spec);
Lattice build(const ModelSpec& spec);

// On-site offsets drawn for `geom` under `d`; zero outside the selected region.
RealVector disorder_offsets(const LatticeGeometry& geom, const DisorderSpec& d);
HermitianOperator apply_disorder(const HermitianOperator& h, const LatticeGeometry& geom,
                                 const DisorderSpec& d);

// site,x,y,row,column,sublattice,edge_depth,region,input_index
void write_geometry_csv(std::ostream& out, const LatticeGeometry& geom);

}  // namespace twophoton::lattice

namespace twophoton {
using lattice::HermitianOperator;
}  // namespace twophoton
