#include "twophoton/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "twophoton/hash.hpp"

namespace twophoton::lattice {

std::string to_string(Region region) {
  switch (region) {
    case Region::LeftClean: return "left";
    case Region::Disordered: return "middle";
    case Region::RightClean: return "right";
  }
  return "unknown";
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Haldane ? "haldane" : "qhe";
}

std::vector<Index> LatticeGeometry::sites_in(Region region) const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i) {
    if (sites[static_cast<std::size_t>(i)].region == region) out.push_back(i);
  }
  return out;
}

HermitianOperator::HermitianOperator(Matrix m, double tolerance) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw ConfigError("hamiltonian", "operator must be square");
  }
  const double defect = hermiticity_defect();
  if (defect > tolerance) {
    throw NumericalError("operator is not Hermitian (max |H - H^dagger| = " +
                         std::to_string(defect) + ")");
  }
}

double HermitianOperator::hermiticity_defect() const {
  if (m_.size() == 0) return 0.0;
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

SparseOperator HermitianOperator::sparse() const {
  std::vector<Eigen::Triplet<Complex>> entries;
  for (Index j = 0; j < m_.cols(); ++j) {
    for (Index i = 0; i < m_.rows(); ++i) {
      if (m_(i, j) != Complex{}) entries.emplace_back(i, j, m_(i, j));
    }
  }
  SparseOperator s(m_.rows(), m_.cols());
  s.setFromTriplets(entries.begin(), entries.end());
  return s;
}

std::string HermitianOperator::digest() const {
  const auto* bytes = reinterpret_cast<const std::byte*>(m_.data());
  return sha256_hex(std::span<const std::byte>(
      bytes, static_cast<std::size_t>(m_.size()) * sizeof(Complex)));
}

namespace {

Region region_for(int column, int length, int disordered) {
  const int left = (length - disordered) / 2;
  if (column < left) return Region::LeftClean;
  if (column < left + disordered) return Region::Disordered;
  return Region::RightClean;
}

void check_common(int nx, int ny, int min_dim, int input_edge, int edge_capacity,
                  int disordered, int region_axis) {
  if (nx < min_dim) throw ConfigError("nx", "must be >= " + std::to_string(min_dim));
  if (ny < min_dim) throw ConfigError("ny", "must be >= " + std::to_string(min_dim));
  if (input_edge < 1 || input_edge > edge_capacity) {
    throw ConfigError("input_edge_length",
                      "must lie in [1, " + std::to_string(edge_capacity) + "]");
  }
  if (disordered < 0 || disordered > region_axis) {
    throw ConfigError("disordered_length",
                      "must lie in [0, " + std::to_string(region_axis) + "]");
  }
}

}  // namespace

void validate(const HaldaneSpec& spec) {
  check_common(spec.nx, spec.ny, 1, spec.input_edge_length, spec.ny, spec.disordered_length,
               spec.ny);
  if (!(spec.kappa1 > 0.0)) throw ConfigError("kappa1", "must be positive");
  if (!(spec.t2 >= 0.0)) throw ConfigError("t2", "must be non-negative");
  if (!std::isfinite(spec.phase)) throw ConfigError("phase", "must be finite");
  if (!std::isfinite(spec.beta)) throw ConfigError("beta", "must be finite");
}

void validate(const QheSpec& spec) {
  check_common(spec.nx, spec.ny, 2, spec.input_edge_length, spec.nx, spec.disordered_length,
               spec.ny);
  if (!(spec.kappa > 0.0)) throw ConfigError("kappa", "must be positive");
  if (!std::isfinite(spec.flux)) throw ConfigError("flux", "must be finite");
}

Lattice build_haldane(const HaldaneSpec& spec) {
  validate(spec);

  const int nx = spec.nx;
  const int ny = spec.ny;
  const int chains = nx + 1;

  // Column extent of each zigzag chain. Hexagon row r starts at column r % 2,
  // so interior chains carry 2ny + 2 sites and the two outer chains 2ny + 1.
  std::vector<int> lo(chains), hi(chains), offset(chains + 1, 0);
  for (int r = 0; r < chains; ++r) {
    if (r == 0) {
      lo[r] = 0;
      hi[r] = 2 * ny;
    } else if (r == nx) {
      lo[r] = (nx - 1) % 2;
      hi[r] = lo[r] + 2 * ny;
    } else {
      lo[r] = 0;
      hi[r] = 2 * ny + 1;
    }
    offset[r + 1] = offset[r] + (hi[r] - lo[r] + 1);
  }
  const Index n = offset[chains];
  auto index_of = [&](int c, int r) -> Index {
    if (r < 0 || r >= chains || c < lo[r] || c > hi[r]) return -1;
    return offset[r] + (c - lo[r]);
  };

  LatticeGeometry geom;
  geom.model = ModelKind::Haldane;
  geom.nx = nx;
  geom.ny = ny;
  geom.sites.resize(static_cast<std::size_t>(n));
  const double half_root3 = std::sqrt(3.0) / 2.0;
  for (int r = 0; r < chains; ++r) {
    for (int c = lo[r]; c <= hi[r]; ++c) {
      Site& s = geom.sites[static_cast<std::size_t>(index_of(c, r))];
      s.row = r;
      s.column = c;
      s.sublattice = (c + r) % 2;
      s.x = 1.5 * r + (s.sublattice == 0 ? 0.5 : 0.0);
      s.y = c * half_root3;
      const int hex_column = std::min(c / 2, ny - 1);
      s.edge_depth = std::min({r, nx - r, c / 2, (2 * ny + 1 - c) / 2});
      s.region = region_for(hex_column, ny, spec.disordered_length);
    }
  }

  Matrix h = Matrix::Zero(n, n);
  std::vector<std::vector<Index>> neighbours(static_cast<std::size_t>(n));
  auto add_bond = [&](Index a, Index b) {
    h(a, b) = spec.kappa1;
    h(b, a) = spec.kappa1;
    neighbours[static_cast<std::size_t>(a)].push_back(b);
    neighbours[static_cast<std::size_t>(b)].push_back(a);
    geom.bonds.emplace_back(std::min(a, b), std::max(a, b));
  };
  for (int r = 0; r < chains; ++r) {
    for (int c = lo[r]; c <= hi[r]; ++c) {
      const Index a = index_of(c, r);
      if (const Index b = index_of(c + 1, r); b >= 0) add_bond(a, b);
      if ((c + r) % 2 == 0) {
        if (const Index b = index_of(c, r + 1); b >= 0) add_bond(a, b);
      }
    }
  }

  // Next-nearest neighbours through the unique shared neighbour k. A hop
  // j -> k -> i turning counter-clockwise in the (y right, x down) picture
  // carries t2 * exp(-i phase); the reverse hop gets the conjugate.
  if (spec.t2 > 0.0) {
    const Complex ccw = spec.t2 * std::exp(-kI * spec.phase);
    for (Index j = 0; j < n; ++j) {
      const Site& sj = geom.sites[static_cast<std::size_t>(j)];
      for (Index k : neighbours[static_cast<std::size_t>(j)]) {
        const Site& sk = geom.sites[static_cast<std::size_t>(k)];
        for (Index i : neighbours[static_cast<std::size_t>(k)]) {
          if (i == j) continue;
          const Site& si = geom.sites[static_cast<std::size_t>(i)];
          const double cross =
              (sk.x - sj.x) * (si.y - sk.y) - (sk.y - sj.y) * (si.x - sk.x);
          h(i, j) = cross > 0.0 ? ccw : std::conj(ccw);
        }
      }
    }
  }
  for (Index i = 0; i < n; ++i) h(i, i) = spec.beta;

  // Outer atoms of the top zigzag chain: odd columns, spaced one lattice
  // constant apart, enumerated from the left end.
  for (int k = 0; k < spec.input_edge_length; ++k) {
    geom.input_edge.push_back(index_of(2 * k + 1, 0));
  }
  return Lattice{HermitianOperator(std::move(h)), std::move(geom)};
}

Lattice build_qhe(const QheSpec& spec) {
  validate(spec);

  const int nx = spec.nx;
  const int ny = spec.ny;
  const Index n = static_cast<Index>(nx) * ny;
  auto index_of = [ny](int row, int col) -> Index {
    return static_cast<Index>(row) * ny + col;
  };

  LatticeGeometry geom;
  geom.model = ModelKind::Qhe;
  geom.nx = nx;
  geom.ny = ny;
  geom.sites.resize(static_cast<std::size_t>(n));
  Matrix h = Matrix::Zero(n, n);
  for (int row = 0; row < nx; ++row) {
    for (int col = 0; col < ny; ++col) {
      const Index a = index_of(row, col);
      Site& s = geom.sites[static_cast<std::size_t>(a)];
      s.row = row;
      s.column = col;
      s.x = row;
      s.y = col;
      s.edge_depth = std::min({row, nx - 1 - row, col, ny - 1 - col});
      s.region = region_for(col, ny, spec.disordered_length);
      if (col + 1 < ny) {
        const Index b = index_of(row, col + 1);
        h(a, b) = spec.kappa;
        h(b, a) = spec.kappa;
        geom.bonds.emplace_back(a, b);
      }
      if (row + 1 < nx) {
        const Index b = index_of(row + 1, col);
        const Complex t = spec.kappa * std::exp(-kI * (spec.flux * (col + 1)));
        h(a, b) = t;
        h(b, a) = std::conj(t);
        geom.bonds.emplace_back(a, b);
      }
    }
  }
  // Left end, top to bottom.
  for (int k = 0; k < spec.input_edge_length; ++k) geom.input_edge.push_back(index_of(k, 0));
  return Lattice{HermitianOperator(std::move(h)), std::move(geom)};
}

Lattice build(const ModelSpec& spec) {
  return std::visit(
      [](const auto& s) -> Lattice {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HaldaneSpec>) {
          return build_haldane(s);
        } else {
          return build_qhe(s);
        }
      },
      spec);
}

RealVector disorder_offsets(const LatticeGeometry& geom, const DisorderSpec& d) {
  if (!(d.sigma >= 0.0) || !std::isfinite(d.sigma)) {
    throw ConfigError("sigma", "must be finite and non-negative");
  }
  RealVector offsets = RealVector::Zero(geom.size());
  if (d.sigma == 0.0) return offsets;
  std::mt19937_64 rng(d.seed);
  std::normal_distribution<double> normal(0.0, d.sigma);
  for (Index i = 0; i < geom.size(); ++i) {
    if (geom.sites[static_cast<std::size_t>(i)].region == d.region) offsets(i) = normal(rng);
  }
  return offsets;
}

HermitianOperator apply_disorder(const HermitianOperator& h, const LatticeGeometry& geom,
                                 const DisorderSpec& d) {
  if (h.dim() != geom.size()) {
    throw ConfigError("disorder", "operator and geometry dimensions differ");
  }
  Matrix m = h.matrix();
  const RealVector offsets = disorder_offsets(geom, d);
  for (Index i = 0; i < m.rows(); ++i) m(i, i) += offsets(i);
  return HermitianOperator(std::move(m));
}

void write_geometry_csv(std::ostream& out, const LatticeGeometry& geom) {
  std::vector<int> input_pos(geom.sites.size(), 0);
  for (std::size_t k = 0; k < geom.input_edge.size(); ++k) {
    input_pos[static_cast<std::size_t>(geom.input_edge[k])] = static_cast<int>(k) + 1;
  }
  const auto old_precision = out.precision(17);
  out << "site,x,y,row,column,sublattice,edge_depth,region,input_index\n";
  for (std::size_t i = 0; i < geom.sites.size(); ++i) {
    const Site& s = geom.sites[i];
    out << i << ',' << s.x << ',' << s.y << ',' << s.row << ',' << s.column << ','
        << s.sublattice << ',' << s.edge_depth << ',' << to_string(s.region) << ','
        << input_pos[i] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace twophoton::lattice
