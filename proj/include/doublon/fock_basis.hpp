#pragma once

// Fixed-N bosonic Fock basis on M sites.
//
// States are ordered lexicographically ascending on the occupation vector
// (n_0, ..., n_{M-1}): the first state is (0, ..., 0, N), the last
// (N, 0, ..., 0). Internally a state is stored as the sorted multiset of its
// occupied sites, which is what the index maps hash.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "doublon/errors.hpp"

namespace doublon {

struct FockState {
  std::vector<int> occupations;

  int particle_count() const {
    int n = 0;
    for (int v : occupations) n += v;
    return n;
  }
  friend bool operator==(const FockState&, const FockState&) = default;
};

struct HopResult {
  double coefficient;
  FockState state;
};

namespace detail {
inline void check_site(const FockState& s, int i) {
  if (i < 0 || i >= static_cast<int>(s.occupations.size())) {
    throw std::out_of_range("site " + std::to_string(i) + " outside a " +
                            std::to_string(s.occupations.size()) + "-site state");
  }
}
}  // namespace detail

/// a†_i a_j. Returns nothing when site j is empty.
inline std::optional<HopResult> apply_hop(const FockState& state, int i, int j) {
  detail::check_site(state, i);
  detail::check_site(state, j);
  if (i == j) throw std::invalid_argument("apply_hop needs distinct sites");
  const int nj = state.occupations[j];
  if (nj == 0) return std::nullopt;
  const int ni = state.occupations[i];
  HopResult out{std::sqrt(static_cast<double>((ni + 1) * nj)), state};
  out.state.occupations[j] -= 1;
  out.state.occupations[i] += 1;
  return out;
}

/// a†_i a†_i a_j a_j. Returns nothing when site j holds fewer than two bosons.
inline std::optional<HopResult> apply_pair_hop(const FockState& state, int i, int j) {
  detail::check_site(state, i);
  detail::check_site(state, j);
  if (i == j) throw std::invalid_argument("apply_pair_hop needs distinct sites");
  const int nj = state.occupations[j];
  if (nj < 2) return std::nullopt;
  const int ni = state.occupations[i];
  HopResult out{std::sqrt(static_cast<double>((ni + 1) * (ni + 2) * nj * (nj - 1))), state};
  out.state.occupations[j] -= 2;
  out.state.occupations[i] += 2;
  return out;
}

struct NumberOperators {
  std::vector<double> n;  // occupation
  std::vector<double> m;  // eigenvalue of a†a†aa, n(n-1)
};

inline NumberOperators number_operators(const FockState& state) {
  NumberOperators out;
  out.n.reserve(state.occupations.size());
  out.m.reserve(state.occupations.size());
  for (int v : state.occupations) {
    out.n.push_back(v);
    out.m.push_back(static_cast<double>(v) * (v - 1));
  }
  return out;
}

enum class IndexMode {
  automatic,  // combinadic for N <= 3, hash otherwise
  hash,
  combinadic
};

/// C(M + N - 1, N), saturating at uint64 max.
inline std::uint64_t basis_dimension(int sites, int particles) {
  if (sites < 1 || particles < 0) return 0;
  // C(n, k) with n = M + N - 1, k = min(N, M - 1), built multiplicatively.
  const std::uint64_t n = static_cast<std::uint64_t>(sites) + particles - 1;
  const std::uint64_t k = std::min<std::uint64_t>(particles, sites - 1);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

inline constexpr std::size_t kDefaultBasisCap = 20'000'000;

class FockBasis {
 public:
  int sites() const { return sites_; }
  int particles() const { return particles_; }
  std::size_t size() const { return size_; }
  IndexMode index_mode() const { return mode_; }

  /// Sorted multiset of occupied sites of state k (length N).
  std::span<const int> occupied_sites(std::size_t k) const {
    return {multisets_.data() + k * particles_, static_cast<std::size_t>(particles_)};
  }

  int occupation(std::size_t k, int site) const {
    const auto s = occupied_sites(k);
    return static_cast<int>(std::count(s.begin(), s.end(), site));
  }

  FockState state(std::size_t k) const {
    FockState out{std::vector<int>(sites_, 0)};
    for (int s : occupied_sites(k)) ++out.occupations[s];
    return out;
  }

  /// Ordinal of a sorted site multiset, if it belongs to the basis.
  std::optional<std::size_t> find_sites(std::span<const int> sorted_sites) const {
    if (static_cast<int>(sorted_sites.size()) != particles_) return std::nullopt;
    for (int s : sorted_sites) {
      if (s < 0 || s >= sites_) return std::nullopt;
    }
    if (mode_ == IndexMode::combinadic) {
      return static_cast<std::size_t>(rank_table_[combinadic_rank(sorted_sites)]);
    }
    auto it = hash_index_.find(hash_key(sorted_sites));
    if (it == hash_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find(const FockState& state) const {
    if (static_cast<int>(state.occupations.size()) != sites_) return std::nullopt;
    std::vector<int> sorted;
    for (int s = 0; s < sites_; ++s) {
      if (state.occupations[s] < 0) return std::nullopt;
      sorted.insert(sorted.end(), state.occupations[s], s);
    }
    return find_sites(sorted);
  }

  std::size_t index_of(const FockState& state) const {
    auto k = find(state);
    if (!k) throw std::out_of_range("state is not part of the basis");
    return *k;
  }

  /// Indices of the states with all N bosons on one site, ordered by site.
  std::vector<std::size_t> single_site_states() const {
    std::vector<std::size_t> out(sites_);
    std::vector<int> tmp(particles_);
    for (int s = 0; s < sites_; ++s) {
      std::fill(tmp.begin(), tmp.end(), s);
      out[s] = *find_sites(tmp);
    }
    return out;
  }

  friend FockBasis enumerate_basis(int sites, int particles, IndexMode mode, std::size_t cap);

 private:
  std::uint64_t combinadic_rank(std::span<const int> sorted_sites) const {
    // multiset s_0 <= ... <= s_{N-1} -> combination c_i = s_i + i, ranked in
    // the combinatorial number system
    std::uint64_t r = 0;
    for (int i = 0; i < particles_; ++i) r += binom(sorted_sites[i] + i, i + 1);
    return r;
  }

  std::uint64_t binom(int n, int k) const { return binom_[static_cast<std::size_t>(n) * (particles_ + 1) + k]; }

  static std::string hash_key(std::span<const int> sorted_sites) {
    return {reinterpret_cast<const char*>(sorted_sites.data()), sorted_sites.size_bytes()};
  }

  int sites_ = 0;
  int particles_ = 0;
  std::size_t size_ = 0;
  IndexMode mode_ = IndexMode::hash;
  std::vector<int> multisets_;
  std::vector<std::uint64_t> binom_;
  std::vector<std::uint32_t> rank_table_;
  std::unordered_map<std::string, std::size_t> hash_index_;
};

inline FockBasis enumerate_basis(int sites, int particles, IndexMode mode = IndexMode::automatic,
                                 std::size_t cap = kDefaultBasisCap) {
  if (sites < 1) throw ConfigError("basis needs at least one site");
  if (particles < 1) throw ConfigError("basis needs at least one particle");
  const std::uint64_t dim = basis_dimension(sites, particles);
  if (dim > cap) {
    throw CapacityError("Fock basis dimension C(" + std::to_string(sites + particles - 1) + "," +
                        std::to_string(particles) + ") = " + std::to_string(dim) +
                        " exceeds the cap of " + std::to_string(cap));
  }
  if (mode == IndexMode::automatic) mode = particles <= 3 ? IndexMode::combinadic : IndexMode::hash;
  if (mode == IndexMode::combinadic && particles > 3) {
    throw ConfigError("combinadic indexing is only available for N <= 3");
  }

  FockBasis b;
  b.sites_ = sites;
  b.particles_ = particles;
  b.size_ = static_cast<std::size_t>(dim);
  b.mode_ = mode;
  b.multisets_.reserve(b.size_ * particles);

  // ascending lexicographic order on (n_0, ..., n_{M-1})
  std::vector<int> occ(sites, 0);
  auto emit = [&] {
    for (int s = 0; s < sites; ++s) b.multisets_.insert(b.multisets_.end(), occ[s], s);
  };
  auto fill = [&](auto&& self, int site, int remaining) -> void {
    if (site == sites - 1) {
      occ[site] = remaining;
      emit();
      occ[site] = 0;
      return;
    }
    for (int n = 0; n <= remaining; ++n) {
      occ[site] = n;
      self(self, site + 1, remaining - n);
    }
    occ[site] = 0;
  };
  fill(fill, 0, particles);

  if (mode == IndexMode::combinadic) {
    const int nmax = sites + particles;
    b.binom_.assign(static_cast<std::size_t>(nmax + 1) * (particles + 1), 0);
    for (int n = 0; n <= nmax; ++n) {
      for (int k = 0; k <= particles; ++k) {
        std::uint64_t v = 0;
        if (k == 0) v = 1;
        else if (n >= k) v = b.binom(n - 1, k - 1) + (n - 1 >= k ? b.binom(n - 1, k) : 0);
        b.binom_[static_cast<std::size_t>(n) * (particles + 1) + k] = v;
      }
    }
    b.rank_table_.assign(b.size_, 0);
    for (std::size_t k = 0; k < b.size_; ++k) {
      b.rank_table_[b.combinadic_rank(b.occupied_sites(k))] = static_cast<std::uint32_t>(k);
    }
  } else {
    b.hash_index_.reserve(b.size_);
    for (std::size_t k = 0; k < b.size_; ++k) b.hash_index_.emplace(FockBasis::hash_key(b.occupied_sites(k)), k);
  }
  return b;
}

}  // namespace doublon
