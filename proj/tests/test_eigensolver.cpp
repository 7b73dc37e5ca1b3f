#include <catch_amalgamated.hpp>

#include <cstdlib>

#include "doublon/eigensolver.hpp"
#include "doublon/hamiltonian.hpp"
#include "doublon/pipeline.hpp"

using namespace doublon;

namespace {

ModelParams fig2() {
  ModelParams p;
  p.t = 2.0;
  p.P = 4.0;
  p.U = 8.0;
  return p;
}

SparseComplexMatrix model(int lx, int ly, Boundary bx, Boundary by, ModelParams p = fig2()) {
  auto lat = build_lattice(lx, ly, bx, by);
  return assemble(p, lat, enumerate_basis(lat.site_count(), p.N));
}

// Distance between the span of `a` and the vector v, after projecting out.
double alignment_defect(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& v) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  return (v - q * (q.adjoint() * v)).norm();
}

}  // namespace

TEST_CASE("dense solver on trivial matrices") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
  d.diagonal() << 3.0, -1.0, cplx(2.0, 1.0);
  auto sol = eig_dense(SparseComplexMatrix::from_dense(d));
  CHECK(sol.eigenvalues(0) == cplx(-1.0));
  CHECK(sol.eigenvalues(1) == cplx(2.0, 1.0));
  CHECK(sol.eigenvalues(2) == cplx(3.0));

  Eigen::MatrixXcd two(2, 2);
  two << 0.0, -1.0, -1.0, 0.0;
  sol = eig_dense(SparseComplexMatrix::from_dense(two));
  CHECK(sol.eigenvalues(0).real() == Catch::Approx(-1.0));
  CHECK(sol.eigenvalues(1).real() == Catch::Approx(1.0));
  CHECK(sol.method == SolveMethod::dense);
}

TEST_CASE("dense eigenpairs are normalized, phase-fixed, sorted and certified") {
  auto h = model(4, 3, Boundary::open(), Boundary::open());
  auto sol = eig_dense(h);
  REQUIRE(sol.size() == 78);
  for (std::size_t j = 0; j < sol.size(); ++j) {
    auto v = sol.right_vectors.col(j);
    CHECK(v.norm() == Catch::Approx(1.0).epsilon(1e-12));
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    CHECK(std::abs(v(imax).imag()) < 1e-14);
    CHECK(v(imax).real() > 0);
    if (j > 0) {
      const cplx a = sol.eigenvalues(j - 1), b = sol.eigenvalues(j);
      CHECK((a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag())));
    }
  }
  CHECK(sol.max_residual() <= kDenseResidualTol * h.frobenius_norm());
}

TEST_CASE("Hermitian limit has real spectrum") {
  auto p = fig2();
  p.t = 0.0;
  auto sol = eig_dense(model(4, 4, Boundary::periodic(), Boundary::periodic(), p));
  CHECK(sol.eigenvalues.imag().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("real-matrix limits give conjugate-paired spectra") {
  // t = 0 with twist pi: the matrix is real, so the spectrum closes under conjugation
  auto p = fig2();
  p.t = 0.0;
  auto sol = eig_dense(model(4, 3, Boundary::twisted(std::numbers::pi), Boundary::open(), p));
  for (Eigen::Index i = 0; i < sol.eigenvalues.size(); ++i) {
    CHECK((sol.eigenvalues.array() - std::conj(sol.eigenvalues(i))).abs().minCoeff() < 1e-9);
  }
}

TEST_CASE("dense cap") {
  auto h = model(4, 3, Boundary::open(), Boundary::open());
  CHECK_THROWS_AS(eig_dense(h, 10), CapacityError);
  ::setenv("DOUBLON_ED_DENSE_CAP", "50", 1);
  CHECK(dense_cap() == 50);
  CHECK_THROWS_AS(eig_dense(h), CapacityError);
  ::setenv("DOUBLON_ED_DENSE_CAP", "junk", 1);
  CHECK(dense_cap() == kDefaultDenseCap);
  ::unsetenv("DOUBLON_ED_DENSE_CAP");
}

TEST_CASE("targeted results are a subset of the dense oracle") {
  struct Case {
    int lx, ly;
    Boundary bx, by;
    cplx sigma;
    int k;
  };
  for (const Case& c : {Case{4, 4, Boundary::periodic(), Boundary::periodic(), -16.0, 24},
                        Case{5, 4, Boundary::open(), Boundary::open(), cplx(-16.1, 0.3), 6},
                        Case{5, 4, Boundary::open(), Boundary::periodic(), cplx(-3.0, 1.0), 12},
                        Case{4, 3, Boundary::open(), Boundary::twisted(1.1), 0.0, 1}}) {
    auto h = model(c.lx, c.ly, c.bx, c.by);
    auto dense = eig_dense(h);
    auto tgt = eig_targeted(h, c.sigma, c.k);
    REQUIRE(tgt.size() == static_cast<std::size_t>(c.k));
    CHECK(tgt.method == SolveMethod::targeted);

    // the k dense eigenvalues nearest sigma
    std::vector<double> dist(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) dist[i] = std::abs(dense.eigenvalues(i) - c.sigma);
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const double radius = sorted[c.k - 1];

    for (std::size_t j = 0; j < tgt.size(); ++j) {
      const cplx e = tgt.eigenvalues(j);
      CHECK(std::abs(e - c.sigma) <= radius + 1e-6);
      // matching dense eigenvalues and their invariant subspace
      std::vector<Eigen::Index> near;
      for (std::size_t i = 0; i < dense.size(); ++i) {
        if (std::abs(dense.eigenvalues(i) - e) < 1e-6) near.push_back(static_cast<Eigen::Index>(i));
      }
      REQUIRE(!near.empty());
      Eigen::MatrixXcd span(h.dim(), static_cast<Eigen::Index>(near.size()));
      for (std::size_t i = 0; i < near.size(); ++i) span.col(i) = dense.right_vectors.col(near[i]);
      CHECK(alignment_defect(span, tgt.right_vectors.col(j)) < 1e-4);
    }
  }
}

TEST_CASE("targeted solve at a known eigenvalue recovers it") {
  auto h = model(4, 3, Boundary::open(), Boundary::open());
  auto dense = eig_dense(h);
  const cplx e = dense.eigenvalues(5);
  auto tgt = eig_targeted(h, e, 1);
  CHECK(std::abs(tgt.eigenvalues(0) - e) < 1e-8);
  CHECK(std::abs(std::abs(tgt.right_vectors.col(0).dot(dense.right_vectors.col(5))) - 1.0) < 1e-8);
}

TEST_CASE("targeted argument checks") {
  auto h = model(3, 2, Boundary::open(), Boundary::open());
  CHECK_THROWS_AS(eig_targeted(h, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(eig_targeted(h, 0.0, static_cast<int>(h.dim()) + 1), ConfigError);
  auto all = eig_targeted(h, -10.0, static_cast<int>(h.dim()));
  CHECK(all.size() == static_cast<std::size_t>(h.dim()));
}

TEST_CASE("targeted solve is deterministic") {
  auto h = model(5, 4, Boundary::open(), Boundary::open());
  auto a = eig_targeted(h, -16.0, 10);
  auto b = eig_targeted(h, -16.0, 10);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.right_vectors == b.right_vectors);
}

TEST_CASE("uncertified targeted solves fall back to dense") {
  // Jordan block: shift-invert at its eigenvalue cannot be resolved in double precision
  const int n = 40;
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
  d.diagonal().setConstant(-16.0);
  d.diagonal(1).setConstant(1.0);
  const auto h = SparseComplexMatrix::from_dense(d);
  CHECK_THROWS_AS(eig_targeted(h, cplx(-16.0), 4), SolverError);

  const auto lat = build_lattice(2, 2, Boundary::open(), Boundary::open());
  SolverConfig cfg;
  cfg.mode = SolverConfig::Mode::targeted;
  cfg.k = 4;
  cfg.dense_fallback = false;
  CHECK_THROWS_AS(solve(h, fig2(), lat, cfg), SolverError);
  cfg.dense_fallback = true;
  const auto sol = solve(h, fig2(), lat, cfg);
  CHECK(sol.method == SolveMethod::dense);
  CHECK(sol.size() == n);
  CHECK(sol.max_residual() < 1e-8 * h.frobenius_norm());
}
