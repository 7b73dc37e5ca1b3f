#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "doublon/observables.hpp"
#include "doublon/pipeline.hpp"

using namespace doublon;

namespace {

Eigen::VectorXcd basis_vector(const FockBasis& b, const std::vector<int>& occ) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(b.size()));
  v(static_cast<Eigen::Index>(b.index_of(FockState{occ}))) = 1.0;
  return v;
}

ObservableGrid grid_of(int lx, int ly, double fill) {
  return {GridKind::n_density, lx, ly, std::vector<double>(lx * ly, fill)};
}

// corner weight straight from the formula with a double loop over sites and
// corners
double corner_weight_reference(const ObservableGrid& g, double xi) {
  double w = 0;
  for (int y = 1; y <= g.ly; ++y) {
    for (int x = 1; x <= g.lx; ++x) {
      for (int cy : {1, g.ly}) {
        for (int cx : {1, g.lx}) {
          w += 0.5 * g.at(x, y) * g.at(x, y) * std::exp(-std::sqrt(double((x - cx) * (x - cx) + (y - cy) * (y - cy))) / xi);
        }
      }
    }
  }
  return w;
}

}  // namespace

TEST_CASE("densities of basis states") {
  auto lat = build_lattice(3, 2, Boundary::open(), Boundary::open());
  auto basis = enumerate_basis(6, 2);

  auto d = basis_vector(basis, {0, 0, 0, 0, 2, 0});
  auto n = density_n(d, basis, lat);
  auto m = density_m(d, basis, lat);
  CHECK(n.at(2, 2) == 2.0);
  CHECK(n.sum() == 2.0);
  CHECK(m.at(2, 2) == 2.0);
  CHECK(m.sum() == 2.0);
  CHECK(doublon_weight(d, basis) == 1.0);

  auto s = basis_vector(basis, {1, 0, 0, 0, 0, 1});
  CHECK(density_m(s, basis, lat).sum() == 0.0);
  CHECK(doublon_weight(s, basis) == 0.0);
  CHECK(density_n(s, basis, lat).at(1, 1) == 1.0);

  // equal superposition of doublons at two sites
  Eigen::VectorXcd sup = (d + basis_vector(basis, {2, 0, 0, 0, 0, 0})) / std::sqrt(2.0);
  auto ns = density_n(sup, basis, lat);
  CHECK(ns.at(2, 2) == Catch::Approx(1.0));
  CHECK(ns.at(1, 1) == Catch::Approx(1.0));

  // global phase does not matter
  Eigen::VectorXcd rotated = sup * std::polar(1.0, 0.7);
  CHECK(density_n(rotated, basis, lat).values == ns.values);
}

TEST_CASE("three bosons on a site") {
  auto lat = build_lattice(2, 1, Boundary::open(), Boundary::open());
  auto basis = enumerate_basis(2, 3);
  auto v = basis_vector(basis, {3, 0});
  CHECK(density_n(v, basis, lat).at(1, 1) == 3.0);
  CHECK(density_m(v, basis, lat).at(1, 1) == 6.0);
  CHECK_THROWS_AS(doublon_weight(v, basis), ConfigError);
}

TEST_CASE("dimension mismatch") {
  auto lat = build_lattice(3, 2, Boundary::open(), Boundary::open());
  auto basis = enumerate_basis(6, 2);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(5);
  CHECK_THROWS_AS(density_n(v, basis, lat), ConfigError);
  CHECK_THROWS_AS(density_m(v, basis, lat), ConfigError);
  auto other = build_lattice(4, 2, Boundary::open(), Boundary::open());
  CHECK_THROWS_AS(density_n(Eigen::VectorXcd::Zero(21), basis, other), ConfigError);
}

TEST_CASE("eigenvector densities obey the sum rules") {
  ModelParams p;
  p.t = 2;
  p.P = 4;
  p.U = 8;
  auto lat = build_lattice(4, 3, Boundary::open(), Boundary::open());
  auto run = solve(Problem{p, lat, std::nullopt}, {SolverConfig::Mode::dense});
  for (std::size_t j = 0; j < run.solution.size(); ++j) {
    auto psi = run.solution.right_vectors.col(static_cast<Eigen::Index>(j));
    auto n = density_n(psi, run.basis, lat);
    auto m = density_m(psi, run.basis, lat);
    CHECK(n.sum() == Catch::Approx(2.0).epsilon(1e-12));
    for (double v : m.values) CHECK(v >= 0.0);
    CHECK(m.sum() <= n.sum() + 1e-12);
    const double dw = doublon_weight(psi, run.basis);
    CHECK(dw >= 0.0);
    CHECK(dw <= 1.0 + 1e-12);
    CHECK(m.sum() == Catch::Approx(2 * dw).margin(1e-12));
  }
}

TEST_CASE("corner weight") {
  auto g = grid_of(8, 8, 0.0);
  CHECK(corner_weight(g) == 0.0);

  g.values[g.values.size() - 1] = 2.0;  // (8, 8)
  const double expect = 2.0 * (1 + 2 * std::exp(-7.0) + std::exp(-7.0 * std::sqrt(2.0)));
  CHECK(corner_weight(g) == Catch::Approx(expect).epsilon(1e-14));
  CHECK(corner_weight(g) == Catch::Approx(2.0).margin(0.01));
  CHECK(corner_weight(g, 1.0, DistanceMetric::manhattan) ==
        Catch::Approx(2.0 * (1 + 2 * std::exp(-7.0) + std::exp(-14.0))));

  auto u = grid_of(8, 8, 2.0 / 64);
  CHECK(corner_weight(u) < 0.01);
  CHECK(corner_weight(u) == Catch::Approx(corner_weight_reference(u, 1.0)));
  CHECK(corner_weight(u, 2.5) == Catch::Approx(corner_weight_reference(u, 2.5)));
  CHECK_THROWS_AS(corner_weight(u, 0.0), ConfigError);
  CHECK_THROWS_AS(corner_weight(u, -1.0), ConfigError);
}

TEST_CASE("inverse participation ratio") {
  auto g = grid_of(5, 4, 0.0);
  g.values[7] = 2.0;
  CHECK(ipr(g) == 1.0);
  CHECK(ipr(grid_of(5, 4, 0.1)) == Catch::Approx(1.0 / 20));
}

TEST_CASE("patch fractions") {
  auto g = grid_of(9, 8, 0.0);
  g.values[g.values.size() - 1] = 1.0;
  g.values[0] = 1.0;
  CHECK(top_right_fraction(g) == 0.5);
  CHECK(right_columns_fraction(g) == 0.5);
}

TEST_CASE("grid CSV") {
  ObservableGrid g{GridKind::m_density, 2, 2, {0.1, 2.0, 1.0 / 3.0, 0.0}};
  std::ostringstream os;
  write_grid_csv(g, os);
  CHECK(os.str() == "x,y,value\n1,1,0.1\n2,1,2\n1,2,0.333333333333\n2,2,0\n");
}

TEST_CASE("state classification") {
  GapWindow gap;
  gap.re_lo = -20;
  gap.re_hi = -13;
  gap.im_lo = -1;
  gap.im_hi = 1;
  Thresholds th;
  CHECK(classify_state({0.3, 0.0}, 0.01, 0.0, &gap, th) == StateClass::scattering);
  CHECK(classify_state({-16.0, 0.0}, 0.99, 0.0, nullptr, th) == StateClass::doublon_bulk);
  CHECK(classify_state({-21.0, 0.0}, 0.99, 1.5, &gap, th) == StateClass::doublon_bulk);
  CHECK(classify_state({-16.0, 0.0}, 0.99, 0.1, &gap, th) == StateClass::in_gap_edge);
  CHECK(classify_state({-16.0, 0.0}, 0.99, 1.9, &gap, th) == StateClass::in_gap_corner);
  CHECK(classify_state({-16.0, 2.0}, 0.99, 1.9, &gap, th) == StateClass::doublon_bulk);
  th.corner = 2.0;
  CHECK(classify_state({-16.0, 0.0}, 0.99, 1.9, &gap, th) == StateClass::in_gap_edge);
}

TEST_CASE("classification is invariant under reordering the solution") {
  ModelParams p;
  p.t = 2;
  p.P = 4;
  p.U = 8;
  auto lat = build_lattice(5, 4, Boundary::open(), Boundary::open());
  auto run = solve(Problem{p, lat, std::nullopt}, {SolverConfig::Mode::targeted, std::nullopt, 28});
  GapWindow gap{-19.0, -13.5, -1.0, 1.0, -19.5, -13.0};
  auto a = classify(run.solution, run.basis, lat, &gap);

  EigenSolution rev = run.solution;
  const Eigen::Index n = rev.eigenvalues.size();
  rev.eigenvalues = run.solution.eigenvalues.reverse();
  rev.right_vectors = run.solution.right_vectors.rowwise().reverse();
  std::reverse(rev.residuals.begin(), rev.residuals.end());
  auto b = classify(rev, run.basis, lat, &gap);
  for (Eigen::Index j = 0; j < n; ++j) {
    CHECK(a[j].cls == b[n - 1 - j].cls);
    CHECK(a[j].corner_weight == Catch::Approx(b[n - 1 - j].corner_weight));
  }
}
