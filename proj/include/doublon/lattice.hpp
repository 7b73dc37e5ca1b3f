#pragma once

// Rectangular lattice with a two-column unit cell.
//
// Sites carry 1-based coordinates (x, y), 1 <= x <= Lx, 1 <= y <= Ly, and a
// 0-based row-major linear index (y - 1) * Lx + (x - 1). Columns 2c-1 and 2c
// form unit cell c; pair hopping acts inside a cell only.
//
// Bond tables:
//   x-bonds    reciprocal (x, y) <-> (x + 1, y), plus the wrap bond
//              (Lx, y) <-> (1, y) when x is periodic or twisted
//   pair bonds (2c - 1, y) <-> (2c, y)
//   y-bonds    one-way: odd columns move a particle y -> y + 1, even columns
//              y + 1 -> y; the wrap bond joins rows Ly and 1

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "doublon/errors.hpp"

namespace doublon {

enum class BoundaryKind { periodic, open, twisted };

struct Boundary {
  BoundaryKind kind = BoundaryKind::open;
  double twist = 0.0;  // radians, only meaningful for twisted

  static Boundary periodic() { return {BoundaryKind::periodic, 0.0}; }
  static Boundary open() { return {BoundaryKind::open, 0.0}; }
  static Boundary twisted(double angle) { return {BoundaryKind::twisted, angle}; }

  bool wraps() const { return kind != BoundaryKind::open; }
  double phase_angle() const { return kind == BoundaryKind::twisted ? twist : 0.0; }

  friend bool operator==(const Boundary&, const Boundary&) = default;
};

inline std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::open: return "open";
    case BoundaryKind::twisted: return "twisted";
  }
  return "open";
}

inline BoundaryKind boundary_kind_from_string(const std::string& name) {
  if (name == "periodic") return BoundaryKind::periodic;
  if (name == "open") return BoundaryKind::open;
  if (name == "twisted") return BoundaryKind::twisted;
  throw ConfigError("unknown boundary kind '" + name + "'");
}

struct Site {
  int x;
  int y;
  friend bool operator==(const Site&, const Site&) = default;
};

/// Reciprocal bond between `left` = (x, y) and `right` = (x + 1, y) (or (1, y)
/// across the wrap).
struct XBond {
  int left;
  int right;
  int column;  // x of the left end
  int row;
  bool crosses_boundary;
};

struct PairBond {
  int odd_site;   // (2c - 1, y)
  int even_site;  // (2c, y)
  int cell;       // c
  int row;
};

/// One-way hop a†_to a_from. `direction` is +1 when the particle moves
/// towards larger y (odd columns) and -1 otherwise (even columns). `row` is
/// the lower row of the bond, Ly for the wrap bond.
struct YBond {
  int from;
  int to;
  int column;
  int row;
  int direction;
  bool crosses_boundary;
};

class LatticeSpec {
 public:
  int lx() const { return lx_; }
  int ly() const { return ly_; }
  const Boundary& bc_x() const { return bc_x_; }
  const Boundary& bc_y() const { return bc_y_; }
  int site_count() const { return lx_ * ly_; }

  int index(int x, int y) const { return (y - 1) * lx_ + (x - 1); }
  Site site(int index) const { return {index % lx_ + 1, index / lx_ + 1}; }

  const std::vector<XBond>& x_bonds() const { return x_bonds_; }
  const std::vector<YBond>& y_bonds() const { return y_bonds_; }
  const std::vector<PairBond>& pair_bonds() const { return pair_bonds_; }

  /// Number of distinct x-bond columns (Lx - 1 open, Lx wrapped).
  int x_bond_columns() const { return bc_x_.wraps() ? lx_ : lx_ - 1; }
  int y_bond_rows() const { return bc_y_.wraps() ? ly_ : ly_ - 1; }
  int cell_count() const { return lx_ / 2; }

  bool is_edge_column(int x) const { return x == 1 || x == lx_; }

  /// (1,1), (Lx,1), (1,Ly), (Lx,Ly).
  std::vector<Site> corners() const { return {{1, 1}, {lx_, 1}, {1, ly_}, {lx_, ly_}}; }

  LatticeSpec with_bc(Boundary bc_x, Boundary bc_y) const;

  friend LatticeSpec build_lattice(int lx, int ly, Boundary bc_x, Boundary bc_y);

 private:
  int lx_ = 0;
  int ly_ = 0;
  Boundary bc_x_;
  Boundary bc_y_;
  std::vector<XBond> x_bonds_;
  std::vector<YBond> y_bonds_;
  std::vector<PairBond> pair_bonds_;
};

inline LatticeSpec build_lattice(int lx, int ly, Boundary bc_x, Boundary bc_y) {
  if (lx < 1 || ly < 1) {
    throw ConfigError("lattice dimensions must be positive, got " + std::to_string(lx) + "x" +
                      std::to_string(ly));
  }
  if (bc_x.kind == BoundaryKind::periodic && lx % 2 != 0) {
    throw ConfigError("periodic x boundary requires even Lx (two-column unit cell), got Lx=" +
                      std::to_string(lx));
  }
  for (const auto* bc : {&bc_x, &bc_y}) {
    if (bc->kind == BoundaryKind::twisted && !std::isfinite(bc->twist)) {
      throw ConfigError("twist angle must be finite");
    }
  }

  LatticeSpec lat;
  lat.lx_ = lx;
  lat.ly_ = ly;
  lat.bc_x_ = bc_x;
  lat.bc_y_ = bc_y;

  for (int y = 1; y <= ly; ++y) {
    for (int x = 1; x <= lx; ++x) {
      if (x < lx) {
        lat.x_bonds_.push_back({lat.index(x, y), lat.index(x + 1, y), x, y, false});
      } else if (bc_x.wraps()) {
        lat.x_bonds_.push_back({lat.index(lx, y), lat.index(1, y), lx, y, true});
      }
    }
  }

  for (int y = 1; y <= ly; ++y) {
    for (int c = 1; 2 * c <= lx; ++c) {
      lat.pair_bonds_.push_back({lat.index(2 * c - 1, y), lat.index(2 * c, y), c, y});
    }
  }

  for (int y = 1; y <= ly; ++y) {
    const bool wrap = (y == ly);
    if (wrap && !bc_y.wraps()) break;
    const int upper = wrap ? 1 : y + 1;
    for (int x = 1; x <= lx; ++x) {
      const int lo = lat.index(x, y);
      const int hi = lat.index(x, upper);
      if (x % 2 == 1) {
        lat.y_bonds_.push_back({lo, hi, x, y, +1, wrap});
      } else {
        lat.y_bonds_.push_back({hi, lo, x, y, -1, wrap});
      }
    }
  }
  return lat;
}

inline LatticeSpec LatticeSpec::with_bc(Boundary bc_x, Boundary bc_y) const {
  return build_lattice(lx_, ly_, bc_x, bc_y);
}

}  // namespace doublon
