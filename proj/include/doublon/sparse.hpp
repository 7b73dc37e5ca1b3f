#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <complex>
#include <cstdio>
#include <ostream>
#include <tuple>
#include <vector>

namespace doublon {

using cplx = std::complex<double>;

/// Square complex matrix in compressed sparse column form. Duplicate entries
/// are summed on construction and exact zeros dropped.
class SparseComplexMatrix {
 public:
  using Storage = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
  using Triplet = Eigen::Triplet<cplx, int>;

  SparseComplexMatrix() = default;

  explicit SparseComplexMatrix(Storage m) : m_(std::move(m)) {
    m_.prune([](const Eigen::Index&, const Eigen::Index&, const cplx& v) { return v != cplx(0.0); });
    m_.makeCompressed();
  }

  static SparseComplexMatrix from_triplets(Eigen::Index dim, const std::vector<Triplet>& triplets) {
    Storage m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return SparseComplexMatrix(std::move(m));
  }

  static SparseComplexMatrix from_dense(const Eigen::MatrixXcd& dense) {
    return SparseComplexMatrix(Storage(dense.sparseView()));
  }

  Eigen::Index dim() const { return m_.rows(); }
  Eigen::Index nnz() const { return m_.nonZeros(); }
  const Storage& storage() const { return m_; }

  cplx coeff(Eigen::Index row, Eigen::Index col) const { return m_.coeff(row, col); }
  Eigen::MatrixXcd to_dense() const { return Eigen::MatrixXcd(m_); }
  double frobenius_norm() const { return m_.norm(); }

  Eigen::VectorXcd operator*(const Eigen::VectorXcd& v) const { return m_ * v; }

  /// Entries sorted by (row, col).
  std::vector<std::tuple<int, int, cplx>> entries() const {
    std::vector<std::tuple<int, int, cplx>> out;
    out.reserve(static_cast<std::size_t>(m_.nonZeros()));
    for (int c = 0; c < m_.outerSize(); ++c) {
      for (Storage::InnerIterator it(m_, c); it; ++it) out.emplace_back(static_cast<int>(it.row()), c, it.value());
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    return out;
  }

 private:
  Storage m_;
};

/// max |H - H†| over all entries.
inline double hermiticity_defect(const SparseComplexMatrix& h) {
  const SparseComplexMatrix::Storage adj = h.storage().adjoint();
  const SparseComplexMatrix::Storage diff = h.storage() - adj;
  double worst = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c) {
    for (SparseComplexMatrix::Storage::InnerIterator it(diff, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

/// Coordinate dump: one "row col re im" line per entry, 0-based, %.17g.
inline void write_coordinate(const SparseComplexMatrix& h, std::ostream& os) {
  char line[128];
  for (const auto& [r, c, v] : h.entries()) {
    std::snprintf(line, sizeof line, "%d %d %.17g %.17g\n", r, c, v.real(), v.imag());
    os << line;
  }
}

}  // namespace doublon
