#pragma once

// Doublon gap window and the many-body winding number
//
//   W(E) = (1/2pi) oint d/dphi arg det(H(phi) - E) dphi
//
// over a twist phi of the y boundary. det is evaluated in the log domain from
// a sparse LU; arg differences are unwrapped step by step and
// the phi grid is doubled until every step stays below pi/2.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "doublon/errors.hpp"
#include "doublon/linalg.hpp"
#include "doublon/observables.hpp"
#include "doublon/pipeline.hpp"

namespace doublon {

inline constexpr double kMinRelativeGap = 0.1;
inline constexpr double kGapPadding = 0.05;

/// Gap window from the doublon states (weight above theta_d) of a reference
/// solution: the widest spacing between consecutive Re E, padded inward by 5%
/// of its width. The imaginary extent spans the bands' imaginary range widened
/// by half the padded gap on both sides.
inline GapWindow gap_window(const EigenSolution& sol, const FockBasis& basis, const Thresholds& th = {},
                            double min_relative_gap = kMinRelativeGap) {
  std::vector<cplx> doublons;
  for (std::size_t j = 0; j < sol.size(); ++j) {
    if (doublon_weight(sol.right_vectors.col(static_cast<Eigen::Index>(j)), basis) > th.doublon) {
      doublons.push_back(sol.eigenvalues(static_cast<Eigen::Index>(j)));
    }
  }
  if (doublons.size() < 2) throw NoGapError("fewer than two doublon states in the reference spectrum");
  std::sort(doublons.begin(), doublons.end(), [](cplx a, cplx b) { return a.real() < b.real(); });

  std::size_t split = 0;
  double widest = -1.0;
  for (std::size_t i = 0; i + 1 < doublons.size(); ++i) {
    const double d = doublons[i + 1].real() - doublons[i].real();
    if (d > widest) {
      widest = d;
      split = i;
    }
  }
  const double range = doublons.back().real() - doublons.front().real();
  if (!(widest >= min_relative_gap * range) || widest <= 0.0) {
    throw NoGapError("doublon bands are not separated: widest spacing " + std::to_string(widest) +
                     " of a band range " + std::to_string(range));
  }

  GapWindow g;
  g.band_lower_top = doublons[split].real();
  g.band_upper_bottom = doublons[split + 1].real();
  g.re_lo = g.band_lower_top + kGapPadding * widest;
  g.re_hi = g.band_upper_bottom - kGapPadding * widest;
  double im_lo = doublons.front().imag(), im_hi = im_lo;
  for (cplx e : doublons) {
    im_lo = std::min(im_lo, e.imag());
    im_hi = std::max(im_hi, e.imag());
  }
  const double half = (g.re_hi - g.re_lo) / 2;
  g.im_lo = im_lo - half;
  g.im_hi = im_hi + half;
  return g;
}

/// Clean periodic reference lattice for a run on `lat`: same Ly, Lx rounded
/// down to even so the unit cell tiles.
inline LatticeSpec reference_lattice(const LatticeSpec& lat) {
  const int lx = lat.lx() % 2 == 0 ? lat.lx() : lat.lx() - 1;
  if (lx < 2) throw ConfigError("lattice too narrow for a periodic reference run");
  return build_lattice(lx, lat.ly(), Boundary::periodic(), Boundary::periodic());
}

/// Gap window of the clean, doubly periodic reference system.
inline GapWindow gap_window(const ModelParams& p, const LatticeSpec& lat, const SolverConfig& solver = {},
                            const Thresholds& th = {}) {
  const SolvedProblem ref = solve(Problem{p, reference_lattice(lat), std::nullopt}, solver);
  return gap_window(ref.solution, ref.basis, th);
}

/// log det(H - E). Throws when the pivot ratio of the factor falls below
/// `floor`, i.e. E sits (numerically) on the spectrum.
inline cplx log_det(const SparseComplexMatrix& h, cplx e, double floor = 1e-12) {
  SparseComplexMatrix::Storage shifted = h.storage();
  SparseComplexMatrix::Storage identity(h.dim(), h.dim());
  identity.setIdentity();
  shifted -= e * identity;
  linalg::SparseLU lu;
  try {
    lu.factorize(shifted, floor);
  } catch (const SolverError& err) {
    throw SolverError("reference energy too close to the spectrum: " + std::string(err.what()));
  }
  return lu.log_determinant();
}

struct WindingOptions {
  int n_phi = 64;
  int max_n_phi = 1024;
  bool reverse = false;  // traverse phi from 2pi down to 0
  double pivot_floor = 1e-12;
};

struct WindingResult {
  cplx E_ref;
  int W = 0;
  int n_phi = 0;
  double max_step_phase = 0.0;
  bool refined = false;
  double accumulated_phase = 0.0;
};

/// Winding of det(H(phi) - E_ref) as the y twist runs over [0, 2pi). The y
/// boundary of `lat` must wrap; its own twist angle is ignored.
inline WindingResult winding_number(const ModelParams& p, const LatticeSpec& lat, cplx e_ref,
                                    const WindingOptions& opt = {}, const DisorderRealization* disorder = nullptr) {
  if (!lat.bc_y().wraps()) throw ConfigError("winding number needs a periodic or twisted y boundary");
  if (opt.n_phi < 2 || opt.max_n_phi < opt.n_phi) throw ConfigError("invalid phi grid for the winding number");
  const FockBasis basis = enumerate_basis(lat.site_count(), p.N);

  auto phase_at = [&](double phi) {
    const auto h = assemble(p, lat.with_bc(lat.bc_x(), Boundary::twisted(phi)), basis, disorder);
    return log_det(h, e_ref, opt.pivot_floor).imag();
  };

  // phases[j] = arg det at phi = 2pi j / grid
  int grid = opt.n_phi;
  std::vector<double> phases(grid);
  for (int j = 0; j < grid; ++j) phases[j] = phase_at(2 * std::numbers::pi * j / grid);

  WindingResult r;
  r.E_ref = e_ref;
  while (true) {
    double total = 0.0, worst = 0.0;
    for (int j = 0; j < grid; ++j) {
      const int next = opt.reverse ? (j + grid - 1) % grid : (j + 1) % grid;
      const double step = std::remainder(phases[next] - phases[j], 2 * std::numbers::pi);
      total += step;
      worst = std::max(worst, std::abs(step));
    }
    r.n_phi = grid;
    r.max_step_phase = worst;
    r.accumulated_phase = total;
    r.refined = grid > opt.n_phi;
    if (worst < std::numbers::pi / 2) break;
    if (grid * 2 > opt.max_n_phi) {
      throw SolverError("winding number phase steps still reach " + std::to_string(worst) + " at N_phi=" +
                        std::to_string(grid) + " (cap " + std::to_string(opt.max_n_phi) + ")");
    }
    std::vector<double> finer(2 * grid);
    for (int j = 0; j < grid; ++j) {
      finer[2 * j] = phases[j];
      finer[2 * j + 1] = phase_at(2 * std::numbers::pi * (2 * j + 1) / (2 * grid));
    }
    phases.swap(finer);
    grid *= 2;
  }
  r.W = static_cast<int>(std::lround(r.accumulated_phase / (2 * std::numbers::pi)));
  if (std::abs(r.accumulated_phase - 2 * std::numbers::pi * r.W) >= 0.01) {
    throw SolverError("accumulated determinant phase is not a multiple of 2pi");
  }
  return r;
}

/// Centroid of the in-gap doublon energies of the x-open, y-periodic system,
/// classified against `gap`.
inline cplx default_reference_energy(const ModelParams& p, const LatticeSpec& lat, const GapWindow& gap,
                                     const SolverConfig& solver = {}, const Thresholds& th = {}) {
  const LatticeSpec strip = lat.with_bc(Boundary::open(), Boundary::periodic());
  const SolvedProblem run = solve(Problem{p, strip, std::nullopt}, solver);
  cplx sum = 0.0;
  int count = 0;
  for (const auto& r : classify(run.solution, run.basis, strip, &gap, th)) {
    if (r.cls == StateClass::in_gap_edge || r.cls == StateClass::in_gap_corner) {
      sum += r.E;
      ++count;
    }
  }
  if (count == 0) throw NoGapError("no in-gap edge band in the x-open, y-periodic system");
  return sum / static_cast<double>(count);
}

/// true where the energy has nonzero winding in the x-open, y-twisted system.
inline std::vector<bool> enclosure_check(const std::vector<cplx>& energies, const ModelParams& p,
                                         const LatticeSpec& lat, const WindingOptions& opt = {}) {
  const LatticeSpec twisted = lat.with_bc(Boundary::open(), Boundary::twisted(0.0));
  std::vector<bool> out;
  out.reserve(energies.size());
  for (cplx e : energies) out.push_back(winding_number(p, twisted, e, opt).W != 0);
  return out;
}

}  // namespace doublon
