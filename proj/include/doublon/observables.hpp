#pragma once

// Per-state diagnostics of right eigenvectors: site densities <n>, <m> with
// m = a†a†aa, doublon weight, corner-skin weight, participation ratio, and
// the scattering / doublon / in-gap classification.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "doublon/eigensolver.hpp"
#include "doublon/errors.hpp"
#include "doublon/fock_basis.hpp"
#include "doublon/lattice.hpp"

namespace doublon {

enum class GridKind { n_density, m_density };

inline std::string to_string(GridKind k) { return k == GridKind::n_density ? "n_density" : "m_density"; }

/// Lx x Ly site values, stored row-major like the lattice index.
struct ObservableGrid {
  GridKind kind = GridKind::n_density;
  int lx = 0;
  int ly = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>((y - 1) * lx + (x - 1))]; }
  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  /// Sum over the rectangle [x0, x1] x [y0, y1] (1-based, inclusive, clipped).
  double sum_over(int x0, int x1, int y0, int y1) const {
    double s = 0.0;
    for (int y = std::max(1, y0); y <= std::min(ly, y1); ++y) {
      for (int x = std::max(1, x0); x <= std::min(lx, x1); ++x) s += at(x, y);
    }
    return s;
  }
};

namespace detail {

inline void check_state(const Eigen::Ref<const Eigen::VectorXcd>& psi, const FockBasis& basis) {
  if (static_cast<std::size_t>(psi.size()) != basis.size()) {
    throw ConfigError("state of length " + std::to_string(psi.size()) + " does not match basis of size " +
                      std::to_string(basis.size()));
  }
}

}  // namespace detail

/// <n_r> = sum_k |psi_k|^2 n_r(k).
inline ObservableGrid density_n(const Eigen::Ref<const Eigen::VectorXcd>& psi, const FockBasis& basis,
                                const LatticeSpec& lattice) {
  detail::check_state(psi, basis);
  if (basis.sites() != lattice.site_count()) throw ConfigError("basis and lattice disagree on the site count");
  ObservableGrid g{GridKind::n_density, lattice.lx(), lattice.ly(), std::vector<double>(lattice.site_count(), 0.0)};
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double p = std::norm(psi(static_cast<Eigen::Index>(k)));
    for (int s : basis.occupied_sites(k)) g.values[s] += p;
  }
  return g;
}

/// <m_r> = sum_k |psi_k|^2 n_r(k) (n_r(k) - 1).
inline ObservableGrid density_m(const Eigen::Ref<const Eigen::VectorXcd>& psi, const FockBasis& basis,
                                const LatticeSpec& lattice) {
  detail::check_state(psi, basis);
  if (basis.sites() != lattice.site_count()) throw ConfigError("basis and lattice disagree on the site count");
  ObservableGrid g{GridKind::m_density, lattice.lx(), lattice.ly(), std::vector<double>(lattice.site_count(), 0.0)};
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double p = std::norm(psi(static_cast<Eigen::Index>(k)));
    const auto sites = basis.occupied_sites(k);
    for (std::size_t i = 0; i < sites.size();) {
      std::size_t j = i;
      while (j < sites.size() && sites[j] == sites[i]) ++j;
      const double n = static_cast<double>(j - i);
      if (n > 1) g.values[sites[i]] += p * n * (n - 1);
      i = j;
    }
  }
  return g;
}

/// sum_r <m_r> / 2, the probability of both bosons sharing a site. N = 2 only.
inline double doublon_weight(const Eigen::Ref<const Eigen::VectorXcd>& psi, const FockBasis& basis) {
  if (basis.particles() != 2) {
    throw ConfigError("doublon weight is defined for N=2, got N=" + std::to_string(basis.particles()));
  }
  detail::check_state(psi, basis);
  double w = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto s = basis.occupied_sites(k);
    if (s[0] == s[1]) w += std::norm(psi(static_cast<Eigen::Index>(k)));
  }
  return w;
}

enum class DistanceMetric { euclidean, manhattan };

/// w = (1/2) sum_{r, corners c} <n_r>^2 exp(-|r - c| / xi).
inline double corner_weight(const ObservableGrid& grid, double xi = 1.0,
                            DistanceMetric metric = DistanceMetric::euclidean) {
  if (!(xi > 0.0)) throw ConfigError("corner weight length xi must be positive");
  const int corners[4][2] = {{1, 1}, {grid.lx, 1}, {1, grid.ly}, {grid.lx, grid.ly}};
  double w = 0.0;
  for (int y = 1; y <= grid.ly; ++y) {
    for (int x = 1; x <= grid.lx; ++x) {
      const double v = grid.at(x, y);
      if (v == 0.0) continue;
      double kernel = 0.0;
      for (const auto& c : corners) {
        const double dx = x - c[0], dy = y - c[1];
        const double d = metric == DistanceMetric::euclidean ? std::hypot(dx, dy) : std::abs(dx) + std::abs(dy);
        kernel += std::exp(-d / xi);
      }
      w += v * v * kernel;
    }
  }
  return w / 2;
}

/// sum_r p_r^2 with p_r = <n_r> / N.
inline double ipr(const ObservableGrid& grid) {
  const double total = grid.sum();
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double v : grid.values) s += (v / total) * (v / total);
  return s;
}

/// Share of the grid in the `size` x `size` patch at (Lx, Ly).
inline double top_right_fraction(const ObservableGrid& grid, int size = 3) {
  const double total = grid.sum();
  if (total <= 0.0) return 0.0;
  return grid.sum_over(grid.lx - size + 1, grid.lx, grid.ly - size + 1, grid.ly) / total;
}

/// Share of the grid in the `columns` rightmost columns.
inline double right_columns_fraction(const ObservableGrid& grid, int columns = 2) {
  const double total = grid.sum();
  if (total <= 0.0) return 0.0;
  return grid.sum_over(grid.lx - columns + 1, grid.lx, 1, grid.ly) / total;
}

/// CSV with header x,y,value, rows in lattice order, values as %.12g.
inline void write_grid_csv(const ObservableGrid& grid, std::ostream& os) {
  os << "x,y,value\n";
  char line[64];
  for (int y = 1; y <= grid.ly; ++y) {
    for (int x = 1; x <= grid.lx; ++x) {
      std::snprintf(line, sizeof line, "%d,%d,%.12g\n", x, y, grid.at(x, y));
      os << line;
    }
  }
}

/// Rectangle in the complex plane between the two doublon bands.
struct GapWindow {
  double re_lo = 0.0;
  double re_hi = 0.0;
  double im_lo = 0.0;
  double im_hi = 0.0;
  double band_lower_top = 0.0;     // highest Re E of the lower band
  double band_upper_bottom = 0.0;  // lowest Re E of the upper band

  bool contains(cplx e) const { return e.real() > re_lo && e.real() < re_hi && e.imag() >= im_lo && e.imag() <= im_hi; }
  double gap() const { return band_upper_bottom - band_lower_top; }
};

struct Thresholds {
  double doublon = 0.5;  // theta_d
  double corner = 0.25;  // theta_w
  double xi = 1.0;
  DistanceMetric metric = DistanceMetric::euclidean;
};

enum class StateClass { scattering, doublon_bulk, in_gap_edge, in_gap_corner };

inline std::string to_string(StateClass c) {
  switch (c) {
    case StateClass::scattering: return "scattering";
    case StateClass::doublon_bulk: return "doublon_bulk";
    case StateClass::in_gap_edge: return "in_gap_edge";
    case StateClass::in_gap_corner: return "in_gap_corner";
  }
  return "scattering";
}

struct StateRecord {
  cplx E;
  double doublon_weight = 0.0;
  double corner_weight = 0.0;
  double ipr = 0.0;
  double residual = 0.0;
  StateClass cls = StateClass::scattering;
};

/// Class of one state from its energy, doublon weight and corner weight.
inline StateClass classify_state(cplx e, double dw, double w, const GapWindow* gap, const Thresholds& th) {
  if (dw < th.doublon) return StateClass::scattering;
  if (gap && gap->contains(e)) return w >= th.corner ? StateClass::in_gap_corner : StateClass::in_gap_edge;
  return StateClass::doublon_bulk;
}

/// One record per eigenpair, in solution order. Without a gap window every
/// doublon is doublon_bulk.
inline std::vector<StateRecord> classify(const EigenSolution& sol, const FockBasis& basis, const LatticeSpec& lattice,
                                         const GapWindow* gap, const Thresholds& th = {}) {
  std::vector<StateRecord> out;
  out.reserve(sol.size());
  for (std::size_t j = 0; j < sol.size(); ++j) {
    const auto psi = sol.right_vectors.col(static_cast<Eigen::Index>(j));
    const ObservableGrid n = density_n(psi, basis, lattice);
    StateRecord r;
    r.E = sol.eigenvalues(static_cast<Eigen::Index>(j));
    r.doublon_weight = doublon_weight(psi, basis);
    r.corner_weight = corner_weight(n, th.xi, th.metric);
    r.ipr = ipr(n);
    r.residual = sol.residuals.empty() ? 0.0 : sol.residuals[j];
    r.cls = classify_state(r.E, r.doublon_weight, r.corner_weight, gap, th);
    out.push_back(r);
  }
  return out;
}

inline std::size_t count_class(const std::vector<StateRecord>& records, StateClass c) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [c](const StateRecord& r) { return r.cls == c; }));
}

}  // namespace doublon
