#pragma once

// Assembly of
//
//   H = - sum (J + J~_x) (a†_{x+1,y} a_{x,y} + h.c.)
//       - U sum n (n - 1)
//       - sum (P/2 + P~_c) (a†a† a a on (2c-1,y) <- (2c,y) + h.c.)
//       - i sum (t + t~_y) (a†_{odd,y+1} a_{odd,y} + a†_{even,y} a_{even,y+1})
//       - (V/2) sum_{x in {1, Lx}} n (n - 1)
//
// in a fixed-N Fock basis. A hop that crosses a twisted boundary picks up
// exp(+i phi) when it moves the particle towards larger x (or y) and
// exp(-i phi) otherwise.

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "doublon/errors.hpp"
#include "doublon/fock_basis.hpp"
#include "doublon/lattice.hpp"
#include "doublon/model.hpp"
#include "doublon/sparse.hpp"

namespace doublon {

/// Single-boson term amp * a†_to a_from.
struct HopTerm {
  int from;
  int to;
  cplx amplitude;
};

/// Pair term amp * a†_to a†_to a_from a_from.
struct PairTerm {
  int from;
  int to;
  cplx amplitude;
};

struct OperatorTerms {
  std::vector<std::vector<HopTerm>> hops_from;    // grouped by source site
  std::vector<std::vector<PairTerm>> pairs_from;  // grouped by source site
  std::vector<double> onsite_two_body;            // coefficient of n(n-1) per site
  std::vector<double> onsite_one_body;            // coefficient of n per site
};

namespace detail {

inline void check_disorder_shape(const LatticeSpec& lat, const DisorderRealization& d) {
  const bool literal = d.correlation == DisorderCorrelation::literal;
  const std::size_t nj = literal ? lat.x_bond_columns() : lat.x_bonds().size();
  const std::size_t np = literal ? lat.cell_count() : lat.pair_bonds().size();
  const std::size_t nt = literal ? lat.y_bond_rows() : lat.y_bonds().size();
  if (d.j_tilde.size() != nj || d.p_tilde.size() != np || d.t_tilde.size() != nt) {
    throw ConfigError("disorder realization does not match the lattice shape");
  }
}

}  // namespace detail

/// Every one- and two-boson term of the Hamiltonian, resolved to sites.
inline OperatorTerms operator_terms(const ModelParams& p, const LatticeSpec& lat,
                                    const DisorderRealization* disorder = nullptr) {
  p.validate();
  if (disorder) detail::check_disorder_shape(lat, *disorder);

  const int M = lat.site_count();
  OperatorTerms terms;
  terms.hops_from.resize(M);
  terms.pairs_from.resize(M);
  terms.onsite_two_body.assign(M, -p.U);
  terms.onsite_one_body.assign(M, 0.0);

  for (int x : {1, lat.lx()}) {
    for (int y = 1; y <= lat.ly(); ++y) {
      const int s = lat.index(x, y);
      if (p.edge_form == EdgePotentialForm::two_body) terms.onsite_two_body[s] = -p.U - p.V / 2;
      else terms.onsite_one_body[s] = -p.V / 2;
    }
  }

  const double phi_x = lat.bc_x().phase_angle();
  const double phi_y = lat.bc_y().phase_angle();

  for (std::size_t b = 0; b < lat.x_bonds().size(); ++b) {
    const XBond& bond = lat.x_bonds()[b];
    const double amp = -(p.J + (disorder ? disorder->x_amplitude(bond, b) : 0.0));
    if (amp == 0.0) continue;
    const cplx forward = bond.crosses_boundary ? std::polar(1.0, phi_x) : cplx(1.0);
    terms.hops_from[bond.left].push_back({bond.left, bond.right, amp * forward});
    terms.hops_from[bond.right].push_back({bond.right, bond.left, amp * std::conj(forward)});
  }

  for (std::size_t b = 0; b < lat.pair_bonds().size(); ++b) {
    const PairBond& bond = lat.pair_bonds()[b];
    double extra = 0.0;
    if (disorder) {
      extra = disorder->pair_amplitude(bond, b);
      if (disorder->halve_pair_amplitude) extra /= 2;
    }
    const double amp = -(p.P / 2 + extra);
    if (amp == 0.0) continue;
    terms.pairs_from[bond.even_site].push_back({bond.even_site, bond.odd_site, amp});
    terms.pairs_from[bond.odd_site].push_back({bond.odd_site, bond.even_site, amp});
  }

  for (std::size_t b = 0; b < lat.y_bonds().size(); ++b) {
    const YBond& bond = lat.y_bonds()[b];
    const double strength = p.t + (disorder ? disorder->y_amplitude(bond, b) : 0.0);
    if (strength == 0.0) continue;
    cplx amp = cplx(0.0, -strength);
    if (bond.crosses_boundary) amp *= std::polar(1.0, bond.direction * phi_y);
    terms.hops_from[bond.from].push_back({bond.from, bond.to, amp});
  }
  return terms;
}

/// Sparse Hamiltonian in `basis`. Column k holds H applied to basis state k.
inline SparseComplexMatrix assemble(const ModelParams& p, const LatticeSpec& lat, const FockBasis& basis,
                                    const DisorderRealization* disorder = nullptr) {
  if (basis.sites() != lat.site_count()) {
    throw ConfigError("basis has " + std::to_string(basis.sites()) + " sites but the lattice has " +
                      std::to_string(lat.site_count()));
  }
  if (basis.particles() != p.N) {
    throw ConfigError("basis holds N=" + std::to_string(basis.particles()) + " but the model asks for N=" +
                      std::to_string(p.N));
  }
  const OperatorTerms terms = operator_terms(p, lat, disorder);
  const int N = basis.particles();

  std::vector<SparseComplexMatrix::Triplet> triplets;
  triplets.reserve(basis.size() * 8);
  std::vector<int> scratch(N);

  auto lookup = [&](std::vector<int>& sites) {
    std::sort(sites.begin(), sites.end());
    return *basis.find_sites(sites);
  };

  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto occupied = basis.occupied_sites(k);
    const int col = static_cast<int>(k);

    double diag = 0.0;
    for (int i = 0; i < N; ++i) {
      const int s = occupied[i];
      if (i > 0 && occupied[i - 1] == s) continue;  // distinct sites only
      const int n = basis.occupation(k, s);
      diag += terms.onsite_two_body[s] * n * (n - 1) + terms.onsite_one_body[s] * n;
    }
    if (diag != 0.0) triplets.emplace_back(col, col, diag);

    for (int i = 0; i < N; ++i) {
      const int from = occupied[i];
      if (i > 0 && occupied[i - 1] == from) continue;
      const int n_from = basis.occupation(k, from);

      for (const HopTerm& h : terms.hops_from[from]) {
        const int n_to = basis.occupation(k, h.to);
        scratch.assign(occupied.begin(), occupied.end());
        scratch[i] = h.to;
        const auto row = lookup(scratch);
        triplets.emplace_back(static_cast<int>(row), col, h.amplitude * std::sqrt(double((n_to + 1) * n_from)));
      }

      if (n_from < 2) continue;
      for (const PairTerm& pt : terms.pairs_from[from]) {
        const int n_to = basis.occupation(k, pt.to);
        scratch.assign(occupied.begin(), occupied.end());
        scratch[i] = pt.to;
        scratch[i + 1] = pt.to;  // occupied is sorted, so from sits at i and i+1
        const auto row = lookup(scratch);
        const double c = std::sqrt(double((n_to + 1) * (n_to + 2) * n_from * (n_from - 1)));
        triplets.emplace_back(static_cast<int>(row), col, pt.amplitude * c);
      }
    }
  }
  return SparseComplexMatrix::from_triplets(static_cast<Eigen::Index>(basis.size()), triplets);
}

inline SparseComplexMatrix assemble(const ModelParams& p, const LatticeSpec& lat, const FockBasis& basis,
                                    const std::optional<DisorderRealization>& disorder) {
  return assemble(p, lat, basis, disorder ? &*disorder : nullptr);
}

}  // namespace doublon
