#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "doublon/fock_basis.hpp"

using namespace doublon;

namespace {

// Every occupation vector of N bosons on M sites by odometer over 0..N.
std::vector<std::vector<int>> brute_states(int M, int N) {
  std::vector<std::vector<int>> out;
  std::vector<int> occ(M, 0);
  while (true) {
    if (std::accumulate(occ.begin(), occ.end(), 0) == N) out.push_back(occ);
    int i = M - 1;
    while (i >= 0 && occ[i] == N) occ[i--] = 0;
    if (i < 0) break;
    ++occ[i];
  }
  return out;  // odometer order is ascending lexicographic
}

}  // namespace

TEST_CASE("basis dimensions") {
  CHECK(enumerate_basis(4, 2).size() == 10);
  CHECK(enumerate_basis(196, 2).size() == 19306);
  CHECK(enumerate_basis(20, 3).size() == 1540);
  CHECK(basis_dimension(72, 2) == 2628);
  CHECK(basis_dimension(1000, 50) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("capacity error names the dimension") {
  try {
    enumerate_basis(200, 3, IndexMode::automatic, 1000);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    CHECK(std::string(e.what()).find("1353400") != std::string::npos);
  }
  CHECK_THROWS_AS(enumerate_basis(0, 2), ConfigError);
  CHECK_THROWS_AS(enumerate_basis(3, 0), ConfigError);
  CHECK_THROWS_AS(enumerate_basis(3, 4, IndexMode::combinadic), ConfigError);
}

TEST_CASE("ordering matches brute-force lexicographic enumeration") {
  for (auto mode : {IndexMode::hash, IndexMode::combinadic}) {
    for (auto [M, N] : {std::pair{4, 2}, std::pair{5, 3}, std::pair{1, 2}, std::pair{6, 1}}) {
      auto basis = enumerate_basis(M, N, mode);
      auto ref = brute_states(M, N);
      REQUIRE(basis.size() == ref.size());
      for (std::size_t k = 0; k < ref.size(); ++k) {
        CHECK(basis.state(k).occupations == ref[k]);
        CHECK(basis.index_of(FockState{ref[k]}) == k);
      }
    }
  }
  auto hashed = enumerate_basis(4, 5);
  CHECK(hashed.index_mode() == IndexMode::hash);
  auto ref = brute_states(4, 5);
  for (std::size_t k = 0; k < ref.size(); ++k) CHECK(hashed.index_of(FockState{ref[k]}) == k);
}

TEST_CASE("round trip on the 9x8 two-boson basis") {
  auto basis = enumerate_basis(72, 2);
  CHECK(basis.index_mode() == IndexMode::combinadic);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    auto s = basis.state(k);
    CHECK(s.particle_count() == 2);
    CHECK(basis.index_of(s) == k);
  }
}

TEST_CASE("states outside the basis") {
  auto basis = enumerate_basis(4, 2);
  CHECK_FALSE(basis.find(FockState{{1, 1, 1, 0}}));
  CHECK_FALSE(basis.find(FockState{{2, 0, 0}}));
  CHECK_THROWS_AS(basis.index_of(FockState{{0, 0, 0, 0}}), std::out_of_range);
}

TEST_CASE("apply_hop") {
  auto r = apply_hop(FockState{{0, 2}}, 0, 1);
  REQUIRE(r);
  CHECK(r->coefficient == Catch::Approx(std::sqrt(2.0)));
  CHECK(r->state.occupations == std::vector<int>{1, 1});

  r = apply_hop(FockState{{1, 1}}, 0, 1);
  REQUIRE(r);
  CHECK(r->coefficient == Catch::Approx(std::sqrt(2.0)));
  CHECK(r->state.occupations == std::vector<int>{2, 0});

  CHECK_FALSE(apply_hop(FockState{{1, 0}}, 0, 1));
  CHECK_THROWS_AS(apply_hop(FockState{{1, 0}}, 0, 2), std::out_of_range);
  CHECK_THROWS_AS(apply_hop(FockState{{1, 0}}, 1, 1), std::invalid_argument);
}

TEST_CASE("apply_pair_hop") {
  auto r = apply_pair_hop(FockState{{0, 2}}, 0, 1);
  REQUIRE(r);
  CHECK(r->coefficient == Catch::Approx(2.0));
  CHECK(r->state.occupations == std::vector<int>{2, 0});

  r = apply_pair_hop(FockState{{1, 2}}, 0, 1);
  REQUIRE(r);
  CHECK(r->coefficient == Catch::Approx(std::sqrt(12.0)));
  CHECK(r->state.occupations == std::vector<int>{3, 0});

  CHECK_FALSE(apply_pair_hop(FockState{{0, 1}}, 0, 1));
  CHECK_THROWS_AS(apply_pair_hop(FockState{{0, 2}}, 0, 0), std::invalid_argument);
}

TEST_CASE("hop matrix elements are conjugate-symmetric and conserve N") {
  auto basis = enumerate_basis(4, 3);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto s = basis.state(k);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        if (auto fwd = apply_hop(s, i, j)) {
          CHECK(fwd->state.particle_count() == 3);
          auto back = apply_hop(fwd->state, j, i);
          REQUIRE(back);
          CHECK(back->state == s);
          CHECK(back->coefficient == Catch::Approx(fwd->coefficient));
        }
        if (auto fwd = apply_pair_hop(s, i, j)) {
          CHECK(fwd->state.particle_count() == 3);
          auto back = apply_pair_hop(fwd->state, j, i);
          REQUIRE(back);
          CHECK(back->coefficient == Catch::Approx(fwd->coefficient));
        }
      }
    }
  }
}

TEST_CASE("number operators") {
  auto ops = number_operators(FockState{{0, 2, 0}});
  CHECK(ops.n == std::vector<double>{0, 2, 0});
  CHECK(ops.m == std::vector<double>{0, 2, 0});
  ops = number_operators(FockState{{1, 0, 1}});
  CHECK(ops.m == std::vector<double>{0, 0, 0});
  ops = number_operators(FockState{{3}});
  CHECK(ops.n[0] == 3);
  CHECK(ops.m[0] == 6);
}

TEST_CASE("single-site states") {
  auto basis = enumerate_basis(5, 2);
  auto d = basis.single_site_states();
  for (int s = 0; s < 5; ++s) CHECK(basis.occupation(d[s], s) == 2);
}
