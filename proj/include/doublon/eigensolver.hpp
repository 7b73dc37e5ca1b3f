#pragma once

// Right eigenpairs of the non-Hermitian Hamiltonian.
//
// eig_dense    every eigenpair via LAPACK zgeev, for dim <= dense cap
// eig_targeted the k eigenpairs closest to a complex shift sigma, by a
//              Krylov-Schur iteration on (H - sigma)^-1 with a sparse LU
//
// Both return unit-norm vectors whose largest-magnitude component is real and
// positive, sorted by (Re E, Im E), each with its residual |H v - E v|.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "doublon/errors.hpp"
#include "doublon/linalg.hpp"
#include "doublon/rng.hpp"
#include "doublon/sparse.hpp"

namespace doublon {

enum class SolveMethod { dense, targeted };

struct EigenSolution {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right_vectors;  // one column per eigenvalue
  std::vector<double> residuals;
  SolveMethod method = SolveMethod::dense;
  cplx sigma{0.0, 0.0};  // targeted only
  int k = 0;             // targeted only

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double max_residual() const {
    return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
  }
};

inline constexpr std::size_t kDefaultDenseCap = 8000;
inline constexpr double kDenseResidualTol = 1e-8;
inline constexpr double kTargetedResidualTol = 1e-6;

/// Dense cap, overridable through DOUBLON_ED_DENSE_CAP.
inline std::size_t dense_cap() {
  if (const char* env = std::getenv("DOUBLON_ED_DENSE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultDenseCap;
}

namespace detail {

/// Unit norm, largest-magnitude component real positive, sorted, residuals.
inline EigenSolution finalize(const SparseComplexMatrix& h, Eigen::VectorXcd values, Eigen::MatrixXcd vectors,
                              SolveMethod method) {
  const Eigen::Index n = values.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    auto v = vectors.col(j);
    v.normalize();
    Eigen::Index imax = 0;
    v.cwiseAbs2().maxCoeff(&imax);
    const cplx c = v(imax);
    if (std::abs(c) > 0) v *= std::conj(c) / std::abs(c);
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values(a).real() != values(b).real()) return values(a).real() < values(b).real();
    return values(a).imag() < values(b).imag();
  });

  EigenSolution out;
  out.method = method;
  out.eigenvalues.resize(n);
  out.right_vectors.resize(vectors.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.eigenvalues(j) = values(order[j]);
    out.right_vectors.col(j) = vectors.col(order[j]);
  }
  const Eigen::MatrixXcd hv = h.storage() * out.right_vectors;
  out.residuals.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.residuals[j] = (hv.col(j) - out.eigenvalues(j) * out.right_vectors.col(j)).norm();
  }
  return out;
}

inline void certify(const EigenSolution& sol, const SparseComplexMatrix& h, double tol) {
  const double bound = tol * std::max(h.frobenius_norm(), 1.0);
  for (std::size_t j = 0; j < sol.residuals.size(); ++j) {
    if (!(sol.residuals[j] <= bound)) {
      throw SolverError("eigenpair " + std::to_string(j) + " has residual " + std::to_string(sol.residuals[j]) +
                        " above " + std::to_string(bound));
    }
  }
}

}  // namespace detail

inline EigenSolution eig_dense(const SparseComplexMatrix& h, std::size_t cap = dense_cap(),
                               double residual_tol = kDenseResidualTol) {
  if (static_cast<std::size_t>(h.dim()) > cap) {
    throw CapacityError("dense eigensolve of dimension " + std::to_string(h.dim()) + " exceeds the dense cap " +
                        std::to_string(cap));
  }
  auto eig = linalg::geev(h.to_dense());
  EigenSolution sol = detail::finalize(h, std::move(eig.values), std::move(eig.vectors), SolveMethod::dense);
  detail::certify(sol, h, residual_tol);
  return sol;
}

struct TargetedOptions {
  int krylov_dim = 0;  // 0 picks min(dim, max(2k + 20, k + 30))
  int max_restarts = 400;
  double schur_tol = 1e-12;  // Schur residual relative to each kept Ritz value
  std::uint64_t start_seed = 0x9d2c5680u;
  double residual_tol = kTargetedResidualTol;  // relative to max(||H||_F, 1)
};

/// The k eigenpairs of `h` nearest to `sigma`.
inline EigenSolution eig_targeted(const SparseComplexMatrix& h, cplx sigma, int k, const TargetedOptions& opt = {}) {
  const Eigen::Index n = h.dim();
  if (k < 1 || k > n) {
    throw ConfigError("targeted solve asks for k=" + std::to_string(k) + " eigenpairs of a dimension-" +
                      std::to_string(n) + " matrix");
  }
  const double hnorm = std::max(h.frobenius_norm(), 1.0);

  // (H - sigma) factorization; on a singular shift retry with a jitter of
  // 1e-8 ||H||_F along (1 + i)/sqrt(2), up to three times.
  SparseComplexMatrix::Storage identity(n, n);
  identity.setIdentity();
  linalg::SparseLU lu;
  cplx shift = sigma;
  for (int attempt = 0;; ++attempt) {
    try {
      lu.factorize(h.storage() - shift * identity, 1e-14);
      break;
    } catch (const SolverError&) {
      if (attempt == 3) throw;
      shift += 1e-8 * hnorm * cplx(1.0, 1.0) / std::sqrt(2.0);
    }
  }

  const int m = opt.krylov_dim > 0 ? std::min<int>(opt.krylov_dim, static_cast<int>(n))
                                   : static_cast<int>(std::min<Eigen::Index>(n, std::max(2 * k + 20, k + 30)));
  if (m < k) throw ConfigError("Krylov dimension smaller than k");
  const int keep = std::min(m - 1, k + (m - k) / 2);

  Xoshiro256 rng(opt.start_seed);
  auto random_vector = [&] {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    return v;
  };

  Eigen::MatrixXcd basis(n, m + 1);
  Eigen::MatrixXcd rayleigh = Eigen::MatrixXcd::Zero(m, m);
  basis.col(0) = random_vector().normalized();
  int p = 0;
  double beta = 0.0;
  Eigen::MatrixXcd schur_t, schur_q;

  for (int restart = 0;; ++restart) {
    for (int j = p; j < m; ++j) {
      Eigen::VectorXcd w = lu.solve(basis.col(j));
      auto v = basis.leftCols(j + 1);
      Eigen::VectorXcd coeffs = v.adjoint() * w;
      w -= v * coeffs;
      const Eigen::VectorXcd again = v.adjoint() * w;
      w -= v * again;
      coeffs += again;
      rayleigh.col(j).head(j + 1) = coeffs;
      beta = w.norm();
      if (beta <= 1e-13 * std::max(coeffs.norm(), 1e-300)) {
        // invariant subspace; continue from a fresh orthogonal direction
        beta = 0.0;
        w = random_vector();
        for (int pass = 0; pass < 2; ++pass) w -= v * (v.adjoint() * w);
      }
      if (j + 1 < m) rayleigh(j + 1, j) = beta;
      basis.col(j + 1) = w.normalized();
    }

    schur_t = rayleigh;
    schur_q = linalg::schur(schur_t);
    // largest |theta| first
    for (int pos = 0; pos < keep; ++pos) {
      int best = pos;
      for (int i = pos + 1; i < m; ++i) {
        if (std::abs(schur_t(i, i)) > std::abs(schur_t(best, best))) best = i;
      }
      linalg::schur_move(schur_t, schur_q, best, pos);
    }

    // per-value test: one eigenvalue next to the shift must not loosen the rest
    bool converged = true;
    for (int j = 0; j < k && converged; ++j) {
      converged = std::abs(beta * schur_q(m - 1, j)) <= opt.schur_tol * std::abs(schur_t(j, j));
    }
    if (converged || m == n) break;
    if (restart == opt.max_restarts) {
      throw SolverError("Krylov-Schur did not converge in " + std::to_string(opt.max_restarts) + " restarts");
    }

    // truncate to the leading `keep` Schur vectors
    basis.leftCols(keep) = (basis.leftCols(m) * schur_q.leftCols(keep)).eval();
    basis.col(keep) = basis.col(m);
    rayleigh.setZero();
    rayleigh.topLeftCorner(keep, keep) = schur_t.topLeftCorner(keep, keep).triangularView<Eigen::Upper>();
    rayleigh.row(keep).head(keep) = beta * schur_q.row(m - 1).head(keep);
    p = keep;
  }

  const Eigen::MatrixXcd tk = schur_t.topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd y = linalg::triangular_eigenvectors(tk);
  Eigen::MatrixXcd vectors = basis.leftCols(m) * (schur_q.leftCols(k) * y);
  Eigen::VectorXcd values(k);
  for (int j = 0; j < k; ++j) values(j) = shift + 1.0 / tk(j, j);

  EigenSolution sol = detail::finalize(h, std::move(values), std::move(vectors), SolveMethod::targeted);
  sol.sigma = sigma;
  sol.k = k;
  detail::certify(sol, h, opt.residual_tol);
  return sol;
}

/// Solver selection used by the pipelines.
struct SolverConfig {
  enum class Mode { automatic, dense, targeted } mode = Mode::automatic;
  std::optional<cplx> sigma;  // default: -2U (the doublon manifold)
  std::optional<int> k;       // default: number of sites + 8
  std::optional<double> residual_tol;
  bool dense_fallback = true;  // uncertified targeted solves are redone densely when under the cap

  double tolerance(SolveMethod m) const {
    return residual_tol.value_or(m == SolveMethod::dense ? kDenseResidualTol : kTargetedResidualTol);
  }
};

}  // namespace doublon
