#pragma once

// One Hamiltonian instance taken from couplings to eigenpairs.

#include <algorithm>
#include <optional>

#include "doublon/eigensolver.hpp"
#include "doublon/fock_basis.hpp"
#include "doublon/hamiltonian.hpp"
#include "doublon/lattice.hpp"
#include "doublon/model.hpp"

namespace doublon {

struct Problem {
  ModelParams params;
  LatticeSpec lattice;
  std::optional<DisorderRealization> disorder;
};

struct SolvedProblem {
  FockBasis basis;
  SparseComplexMatrix h;
  EigenSolution solution;
};

/// Shift and count used for doublon-sector solves when the config leaves them
/// open: sigma = -2U, k = sites + 8 (clipped to the dimension).
inline cplx default_sigma(const ModelParams& p) { return {-2.0 * p.U, 0.0}; }
inline int default_k(const LatticeSpec& lat, Eigen::Index dim) {
  return static_cast<int>(std::min<Eigen::Index>(dim, lat.site_count() + 8));
}

inline EigenSolution solve(const SparseComplexMatrix& h, const ModelParams& p, const LatticeSpec& lat,
                           const SolverConfig& cfg) {
  SolverConfig::Mode mode = cfg.mode;
  if (mode == SolverConfig::Mode::automatic) {
    mode = static_cast<std::size_t>(h.dim()) <= dense_cap() ? SolverConfig::Mode::dense : SolverConfig::Mode::targeted;
  }
  if (mode == SolverConfig::Mode::dense) return eig_dense(h, dense_cap(), cfg.tolerance(SolveMethod::dense));
  TargetedOptions opt;
  opt.residual_tol = cfg.tolerance(SolveMethod::targeted);
  try {
    return eig_targeted(h, cfg.sigma.value_or(default_sigma(p)), cfg.k.value_or(default_k(lat, h.dim())), opt);
  } catch (const SolverError&) {
    // shift-invert loses accuracy when the shift sits in a wide pseudospectrum
    if (!cfg.dense_fallback || static_cast<std::size_t>(h.dim()) > dense_cap()) throw;
    return eig_dense(h, dense_cap(), cfg.tolerance(SolveMethod::dense));
  }
}

inline SolvedProblem solve(const Problem& prob, const SolverConfig& cfg = {}) {
  FockBasis basis = enumerate_basis(prob.lattice.site_count(), prob.params.N);
  SparseComplexMatrix h = assemble(prob.params, prob.lattice, basis, prob.disorder);
  EigenSolution sol = solve(h, prob.params, prob.lattice, cfg);
  return {std::move(basis), std::move(h), std::move(sol)};
}

}  // namespace doublon
