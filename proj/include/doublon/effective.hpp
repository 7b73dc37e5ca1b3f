#pragma once

// Strong-interaction doublon theory.
//
// At second order in the hoppings a doublon on site r moves as a single
// particle with
//
//   onsite     -(2U + z_r J0) - V [edge columns]   z_r = x-neighbours of r
//   x hop      -J0 per x-bond, -(J0 + P) inside a unit cell
//   y hop      +t0 along the one-way direction only
//
// with J0 = J^2/U and t0 = t^2/U. Along x this is the chain
//
//   -(J0 + 2U) - V, -(2J0 + 2U), ..., -(J0 + 2U) - V
//
// with alternating hops -(J0 + P) (odd site to its right neighbour) and -J0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "doublon/errors.hpp"
#include "doublon/fock_basis.hpp"
#include "doublon/hamiltonian.hpp"
#include "doublon/lattice.hpp"
#include "doublon/matching.hpp"
#include "doublon/model.hpp"
#include "doublon/sparse.hpp"

namespace doublon {

struct EffectiveModel {
  double J_eff = 0.0;
  double t_eff = 0.0;
  double U_eff_bulk = 0.0;
  double U_eff_edge = 0.0;
  double P = 0.0;
  double V = 0.0;
  bool perturbative = true;  // |U| >= 5 max(|J|, |t|, |P|)
  LatticeSpec lattice;
};

inline EffectiveModel effective_model(const ModelParams& p, const LatticeSpec& lat) {
  p.validate();
  if (p.U == 0.0) throw ConfigError("the effective doublon theory needs U != 0");
  EffectiveModel m;
  m.J_eff = p.J * p.J / p.U;
  m.t_eff = p.t * p.t / p.U;
  m.U_eff_bulk = 2 * m.J_eff + 2 * p.U;
  m.U_eff_edge = m.J_eff + 2 * p.U;
  m.P = p.P;
  m.V = p.V;
  m.perturbative = std::abs(p.U) >= 5 * std::max({std::abs(p.J), std::abs(p.t), std::abs(p.P)});
  m.lattice = lat;
  return m;
}

/// Effective doublon Hamiltonian on the Lx*Ly sites; row/column r is the
/// doublon on site r. Twisted boundaries contribute the squared twist phase.
inline SparseComplexMatrix build_H_eff(const ModelParams& p, const LatticeSpec& lat) {
  const EffectiveModel m = effective_model(p, lat);
  const int M = lat.site_count();
  std::vector<SparseComplexMatrix::Triplet> trip;
  std::vector<int> x_degree(M, 0);

  const double phi_x = lat.bc_x().phase_angle();
  const double phi_y = lat.bc_y().phase_angle();
  for (const XBond& b : lat.x_bonds()) {
    const cplx ph = b.crosses_boundary ? std::polar(1.0, 2 * phi_x) : cplx(1.0);
    trip.emplace_back(b.right, b.left, -m.J_eff * ph);
    trip.emplace_back(b.left, b.right, -m.J_eff * std::conj(ph));
    ++x_degree[b.left];
    ++x_degree[b.right];
  }
  for (const PairBond& b : lat.pair_bonds()) {
    trip.emplace_back(b.odd_site, b.even_site, -p.P);
    trip.emplace_back(b.even_site, b.odd_site, -p.P);
  }
  for (const YBond& b : lat.y_bonds()) {
    const cplx ph = b.crosses_boundary ? std::polar(1.0, 2 * b.direction * phi_y) : cplx(1.0);
    trip.emplace_back(b.to, b.from, m.t_eff * ph);
  }
  for (int s = 0; s < M; ++s) {
    double onsite = -(2 * p.U + x_degree[s] * m.J_eff);
    if (lat.is_edge_column(lat.site(s).x)) onsite -= p.V;
    trip.emplace_back(s, s, onsite);
  }
  return SparseComplexMatrix::from_triplets(M, trip);
}

/// Second-order quasi-degenerate projection of the full N = 2 Hamiltonian on
/// the doublon states, with H0 = -U sum n(n-1) and everything else as the
/// perturbation:
///
///   H_eff(d, d') = <d|H|d'> + sum_s <d|H|s><s|H|d'> / (-2U)
///
/// since every doublon sits at -2U and every scattering state at 0 in H0.
inline Eigen::MatrixXcd derive_eff_numerically(const ModelParams& p, const LatticeSpec& lat, const FockBasis& basis) {
  if (p.U == 0.0) throw ConfigError("the effective doublon theory needs U != 0");
  if (basis.particles() != 2) throw ConfigError("the doublon projector needs the N=2 basis");
  const SparseComplexMatrix h = assemble(p, lat, basis);
  const int M = lat.site_count();
  const auto doublons = basis.single_site_states();

  // select rows/columns: D picks the doublons (by site), S the rest
  std::vector<int> slot(basis.size(), -1);
  for (int s = 0; s < M; ++s) slot[doublons[s]] = s;
  std::vector<SparseComplexMatrix::Triplet> d_sel, s_sel;
  int ns = 0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (slot[k] >= 0) d_sel.emplace_back(slot[k], static_cast<int>(k), 1.0);
    else s_sel.emplace_back(ns++, static_cast<int>(k), 1.0);
  }
  SparseComplexMatrix::Storage pd(M, static_cast<Eigen::Index>(basis.size()));
  SparseComplexMatrix::Storage ps(ns, static_cast<Eigen::Index>(basis.size()));
  pd.setFromTriplets(d_sel.begin(), d_sel.end());
  ps.setFromTriplets(s_sel.begin(), s_sel.end());

  const SparseComplexMatrix::Storage hdd = pd * h.storage() * pd.transpose();
  const SparseComplexMatrix::Storage hds = pd * h.storage() * ps.transpose();
  const SparseComplexMatrix::Storage hsd = ps * h.storage() * pd.transpose();
  const SparseComplexMatrix::Storage second = hds * hsd;
  return Eigen::MatrixXcd(hdd) + Eigen::MatrixXcd(second) / (-2.0 * p.U);
}

/// Decoupled pair-hopping chain of length L along x (open ends).
inline Eigen::MatrixXd build_H_1D(const ModelParams& p, int L) {
  if (p.U == 0.0) throw ConfigError("the effective doublon theory needs U != 0");
  if (L < 1) throw ConfigError("chain length must be positive");
  const double j0 = p.J * p.J / p.U;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L, L);
  for (int i = 0; i < L; ++i) h(i, i) = -(2 * j0 + 2 * p.U);
  h(0, 0) += j0 - p.V;
  h(L - 1, L - 1) += j0 - (L > 1 ? p.V : 0.0);
  for (int i = 0; i + 1 < L; ++i) {
    // 0-based i even is the odd site 2c - 1 of cell c
    const double hop = i % 2 == 0 ? -(j0 + p.P) : -j0;
    h(i, i + 1) = h(i + 1, i) = hop;
  }
  return h;
}

/// One right-edge branch of the chain. On an odd chain with C cells the
/// state is beta_{2c-1} = zeta2^(c-C), beta_{2c} = b_over_a * zeta2^(c-C),
/// with zeta2 the signed per-cell ratio.
struct EdgeBranch {
  double eps = 0.0;
  double zeta2 = 0.0;
  double zeta2_abs = 0.0;
  bool exists = false;  // |zeta2| > 1, localized at the right edge
  double b_over_a = 0.0;
};

struct EdgeSolution {
  double J0 = 0.0;
  double S = 0.0;  // 2 J0 P + P^2
  double R = 0.0;  // sqrt(S^2 + 4 J0^4)
  EdgeBranch plus;
  EdgeBranch minus;

  double eps_plus() const { return plus.eps; }
  double eps_minus() const { return minus.eps; }
  double zeta2_plus() const { return plus.zeta2_abs; }
  double zeta2_minus() const { return minus.zeta2_abs; }
  bool exists_minus() const { return minus.exists; }
};

/// Right-edge states of the semi-infinite chain (V = 0):
///
///   eps_+ = -J0 - 2U + (S - R)/(2 J0),  |zeta^2_+| = (S + R) / (2 J0 |J0 + P|)
///   eps_- = -J0 - 2U + (S + R)/(2 J0),  |zeta^2_-| = |S - R| / (2 J0 |J0 + P|)
///
/// A branch exists when |zeta^2| > 1; eps_- then exists exactly for
/// -2 J0 < P < 0.
inline EdgeSolution analytic_edge(const ModelParams& p) {
  if (p.U == 0.0) throw ConfigError("analytic edge states need U != 0");
  if (p.J == 0.0) throw ConfigError("analytic edge states need J != 0");
  const double j0 = p.J * p.J / p.U;
  const double w = j0 + p.P;
  if (j0 * w == 0.0) throw ConfigError("analytic edge states are singular for J0 (J0 + P) = 0");

  EdgeSolution e;
  e.J0 = j0;
  e.S = 2 * j0 * p.P + p.P * p.P;
  e.R = std::sqrt(e.S * e.S + 4 * j0 * j0 * j0 * j0);

  auto branch = [&](double eps, double z) {
    EdgeBranch b;
    b.eps = eps;
    b.zeta2 = z;
    b.zeta2_abs = std::abs(z);
    b.exists = b.zeta2_abs > 1.0 + 1e-12;
    b.b_over_a = -j0 / w;  // right boundary equation
    return b;
  };
  e.plus = branch(-j0 - 2 * p.U + (e.S - e.R) / (2 * j0), -(e.S + e.R) / (2 * w * j0));
  e.minus = branch(-j0 - 2 * p.U + (e.S + e.R) / (2 * j0), (e.R - e.S) / (2 * w * j0));
  return e;
}

/// Trial eigenvector of branch `b` on an odd chain of length L, unit norm,
/// largest at the right edge.
inline Eigen::VectorXd edge_trial_vector(const EdgeBranch& b, int L) {
  if (L < 1 || L % 2 == 0) throw ConfigError("edge trial vector needs an odd chain length");
  const int cells = (L + 1) / 2;
  Eigen::VectorXd v(L);
  for (int c = 1; c <= cells; ++c) {
    const double scale = std::pow(b.zeta2, c - cells);
    v(2 * c - 2) = scale;
    if (2 * c - 1 < L) v(2 * c - 1) = b.b_over_a * scale;
  }
  return v.normalized();
}

/// max |(H_1D v - eps v)_i| over the bulk rows 2..L-1 (1-based).
inline double bulk_recursion_residual(const Eigen::MatrixXd& h1d, const Eigen::VectorXd& v, double eps) {
  const Eigen::VectorXd r = h1d * v - eps * v;
  return r.size() > 2 ? r.segment(1, r.size() - 2).cwiseAbs().maxCoeff() : 0.0;
}

/// |(H_1D v - eps v)_L|, the right boundary equation.
inline double right_boundary_residual(const Eigen::MatrixXd& h1d, const Eigen::VectorXd& v, double eps) {
  const Eigen::VectorXd r = h1d * v - eps * v;
  return std::abs(r(r.size() - 1));
}

/// |zeta^2| from a least-squares fit of log|beta| on the odd sites against the
/// cell index, over cells 2..C where the amplitude exceeds `floor` * max.
inline double fit_cell_decay(const Eigen::VectorXd& v, double floor = 1e-9) {
  const int L = static_cast<int>(v.size());
  const int cells = (L + 1) / 2;
  const double vmax = v.cwiseAbs().maxCoeff();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int c = 2; c <= cells; ++c) {
    const double a = std::abs(v(2 * c - 2));
    if (a <= floor * vmax) continue;
    const double y = std::log(a);
    sx += c;
    sy += y;
    sxx += double(c) * c;
    sxy += c * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return std::exp(slope);
}

struct SpectrumComparison {
  struct Pair {
    int full;
    int eff;
    double distance;
  };
  std::vector<Pair> pairs;
  std::vector<int> unmatched_full;
  std::vector<int> unmatched_eff;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  bool size_mismatch() const { return !unmatched_full.empty() || !unmatched_eff.empty(); }
};

/// Minimum-total-distance one-to-one matching of two complex spectra.
inline SpectrumComparison compare_spectra(const std::vector<cplx>& full, const std::vector<cplx>& eff) {
  const bool swap = full.size() > eff.size();
  const auto& rows = swap ? eff : full;
  const auto& cols = swap ? full : eff;
  Eigen::MatrixXd cost(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost(i, j) = std::abs(rows[i] - cols[j]);
  }
  const std::vector<int> assign = hungarian(cost);

  SpectrumComparison out;
  std::vector<char> full_used(full.size(), 0), eff_used(eff.size(), 0);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    const int f = swap ? assign[i] : static_cast<int>(i);
    const int e = swap ? static_cast<int>(i) : assign[i];
    const double d = std::abs(full[f] - eff[e]);
    out.pairs.push_back({f, e, d});
    full_used[f] = eff_used[e] = 1;
    out.max_abs = std::max(out.max_abs, d);
    out.mean_abs += d;
  }
  if (!out.pairs.empty()) out.mean_abs /= static_cast<double>(out.pairs.size());
  std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& a, const auto& b) { return a.full < b.full; });
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (!full_used[i]) out.unmatched_full.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < eff.size(); ++i) {
    if (!eff_used[i]) out.unmatched_eff.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace doublon
