#pragma once

// Thin wrappers over LAPACK (dense non-symmetric eigenproblems, complex Schur
// forms) and UMFPACK (sparse LU).

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <umfpack.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "doublon/errors.hpp"
#include "doublon/sparse.hpp"

namespace doublon::linalg {

struct DenseEigen {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  // right eigenvectors, columns
};

/// All eigenpairs of a general complex matrix (zgeev).
inline DenseEigen geev(Eigen::MatrixXcd a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  DenseEigen out{Eigen::VectorXcd(n), Eigen::MatrixXcd(n, n)};
  if (n == 0) return out;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, out.values.data(), nullptr, 1,
                                        out.vectors.data(), n);
  if (info != 0) throw SolverError("zgeev failed with info=" + std::to_string(info));
  return out;
}

/// Eigenvalues only.
inline Eigen::VectorXcd eigenvalues(Eigen::MatrixXcd a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXcd w(n);
  if (n == 0) return w;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw SolverError("zgeev failed with info=" + std::to_string(info));
  return w;
}

/// In-place complex Schur decomposition A = Q T Q^*; `a` becomes T.
inline Eigen::MatrixXcd schur(Eigen::MatrixXcd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXcd q(n, n);
  Eigen::VectorXcd w(n);
  lapack_int sdim = 0;
  const lapack_int info =
      LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, a.data(), n, &sdim, w.data(), q.data(), n);
  if (info != 0) throw SolverError("zgees failed with info=" + std::to_string(info));
  return q;
}

/// Moves diagonal entry `from` of the Schur form to position `to` (0-based),
/// updating the Schur vectors.
inline void schur_move(Eigen::MatrixXcd& t, Eigen::MatrixXcd& q, int from, int to) {
  if (from == to) return;
  const lapack_int n = static_cast<lapack_int>(t.rows());
  const lapack_int info = LAPACKE_ztrexc(LAPACK_COL_MAJOR, 'V', n, t.data(), n, q.data(), n, from + 1, to + 1);
  if (info != 0) throw SolverError("ztrexc failed with info=" + std::to_string(info));
}

/// Right eigenvectors of an upper-triangular matrix.
inline Eigen::MatrixXcd triangular_eigenvectors(Eigen::MatrixXcd t) {
  const lapack_int n = static_cast<lapack_int>(t.rows());
  Eigen::MatrixXcd vr = Eigen::MatrixXcd::Zero(n, n);  // LAPACKE nan-checks it on entry
  lapack_int used = 0;
  const lapack_int info =
      LAPACKE_ztrevc(LAPACK_COL_MAJOR, 'R', 'A', nullptr, n, t.data(), n, nullptr, 1, vr.data(), n, n, &used);
  if (info != 0) throw SolverError("ztrevc failed with info=" + std::to_string(info));
  return vr;
}

/// Sparse LU (UMFPACK) of a complex matrix: solves and a log-domain
/// determinant that survives the overflow of det itself.
class SparseLU {
 public:
  SparseLU() { umfpack_zi_defaults(control_); }
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;
  ~SparseLU() { release(); }

  /// Throws SolverError when UMFPACK fails or min|u_jj| / max|u_jj| of the
  /// scaled factor drops below `rcond_floor`.
  void factorize(const SparseComplexMatrix::Storage& a, double rcond_floor) {
    release();
    a_ = a;
    a_.makeCompressed();
    const int n = static_cast<int>(a_.rows());
    const double* ax = reinterpret_cast<const double*>(a_.valuePtr());
    int status = umfpack_zi_symbolic(n, n, a_.outerIndexPtr(), a_.innerIndexPtr(), ax, nullptr, &symbolic_, control_,
                                     info_);
    if (status != UMFPACK_OK) throw SolverError("UMFPACK symbolic analysis failed (status " + std::to_string(status) + ")");
    status = umfpack_zi_numeric(a_.outerIndexPtr(), a_.innerIndexPtr(), ax, nullptr, symbolic_, &numeric_, control_,
                                info_);
    if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix) {
      throw SolverError("UMFPACK factorization failed (status " + std::to_string(status) + ")");
    }
    const double rc = info_[UMFPACK_RCOND];
    if (status == UMFPACK_WARNING_singular_matrix || !(rc > rcond_floor)) {
      throw SolverError("sparse LU pivot ratio " + std::to_string(rc) + " below floor " + std::to_string(rcond_floor));
    }
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const {
    Eigen::VectorXcd x(b.size());
    const int status = umfpack_zi_solve(UMFPACK_A, a_.outerIndexPtr(), a_.innerIndexPtr(),
                                        reinterpret_cast<const double*>(a_.valuePtr()), nullptr,
                                        reinterpret_cast<double*>(x.data()), nullptr,
                                        reinterpret_cast<const double*>(b.data()), nullptr, numeric_, control_, info_);
    if (status != UMFPACK_OK) throw SolverError("UMFPACK solve failed (status " + std::to_string(status) + ")");
    return x;
  }

  /// log det with the imaginary part in (-pi, pi].
  cplx log_determinant() const {
    double m[2], ex = 0.0;
    const int status = umfpack_zi_get_determinant(m, nullptr, &ex, numeric_, info_);
    if (status != UMFPACK_OK) throw SolverError("UMFPACK determinant failed (status " + std::to_string(status) + ")");
    const cplx mant(m[0], m[1]);
    return {std::log(std::abs(mant)) + ex * std::numbers::ln10, std::arg(mant)};
  }

  double rcond() const { return info_[UMFPACK_RCOND]; }

 private:
  void release() {
    if (numeric_) umfpack_zi_free_numeric(&numeric_);
    if (symbolic_) umfpack_zi_free_symbolic(&symbolic_);
  }

  SparseComplexMatrix::Storage a_;
  void* symbolic_ = nullptr;
  void* numeric_ = nullptr;
  double control_[UMFPACK_CONTROL];
  mutable double info_[UMFPACK_INFO];
};

}  // namespace doublon::linalg
