#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doublon/errors.hpp"
#include "doublon/lattice.hpp"
#include "doublon/rng.hpp"

namespace doublon {

/// How the edge compensating potential V acts on columns 1 and Lx.
enum class EdgePotentialForm {
  two_body,       // -(V/2) n(n-1): shifts a doublon by -V, leaves single bosons alone
  single_particle // -(V/2) n
};

/// Couplings of the extended Bose-Hubbard Hamiltonian. U > 0 is attractive.
struct ModelParams {
  double J = 1.0;  // reciprocal x hopping
  double t = 0.0;  // one-way y hopping amplitude
  double P = 0.0;  // pair hopping inside a unit cell
  double U = 0.0;  // onsite interaction
  double V = 0.0;  // edge compensating potential
  int N = 2;       // particle number
  EdgePotentialForm edge_form = EdgePotentialForm::two_body;

  void validate() const {
    for (double c : {J, t, P, U, V}) {
      if (!std::isfinite(c)) throw ConfigError("model couplings must be finite");
    }
    if (N < 1) throw ConfigError("particle number must be >= 1, got " + std::to_string(N));
  }
};

enum class DisorderCorrelation {
  literal,  // J~ per column, t~ per row, P~ per cell, shared across the other index
  per_bond  // an independent amplitude on every bond
};

/// Random hopping amplitudes added on top of the clean couplings.
///
/// Literal mode: j_tilde[x-1] for every x-bond of column x, p_tilde[c-1] for
/// every pair bond of cell c, t_tilde[y-1] for every y-bond of row y.
/// Per-bond mode: the arrays are indexed by the bond ordinal in the lattice
/// tables instead.
///
/// Draw order is fixed: all of j_tilde, then p_tilde, then t_tilde, each value
/// W * (u - 1/2) with u from Xoshiro256(seed).
struct DisorderRealization {
  double W = 0.0;
  std::uint64_t seed = 0;
  DisorderCorrelation correlation = DisorderCorrelation::literal;
  std::vector<double> j_tilde;
  std::vector<double> p_tilde;
  std::vector<double> t_tilde;
  /// The disordered pair term is -P~ (...) as written; set to use -(P~/2) instead.
  bool halve_pair_amplitude = false;

  double x_amplitude(const XBond& bond, std::size_t ordinal) const {
    return correlation == DisorderCorrelation::literal ? j_tilde.at(bond.column - 1)
                                                       : j_tilde.at(ordinal);
  }
  double pair_amplitude(const PairBond& bond, std::size_t ordinal) const {
    return correlation == DisorderCorrelation::literal ? p_tilde.at(bond.cell - 1)
                                                       : p_tilde.at(ordinal);
  }
  double y_amplitude(const YBond& bond, std::size_t ordinal) const {
    return correlation == DisorderCorrelation::literal ? t_tilde.at(bond.row - 1)
                                                       : t_tilde.at(ordinal);
  }
};

inline DisorderRealization sample_disorder(const LatticeSpec& lattice, double W, std::uint64_t seed,
                                           DisorderCorrelation correlation = DisorderCorrelation::literal) {
  if (!(W >= 0.0) || !std::isfinite(W)) {
    throw ConfigError("disorder strength W must be finite and non-negative");
  }
  DisorderRealization d;
  d.W = W;
  d.seed = seed;
  d.correlation = correlation;

  const bool literal = correlation == DisorderCorrelation::literal;
  const std::size_t nj = literal ? lattice.x_bond_columns() : lattice.x_bonds().size();
  const std::size_t np = literal ? lattice.cell_count() : lattice.pair_bonds().size();
  const std::size_t nt = literal ? lattice.y_bond_rows() : lattice.y_bonds().size();

  Xoshiro256 rng(seed);
  auto draw = [&](std::vector<double>& out, std::size_t n) {
    out.resize(n);
    for (auto& v : out) v = W * (rng.uniform() - 0.5);
  };
  draw(d.j_tilde, nj);
  draw(d.p_tilde, np);
  draw(d.t_tilde, nt);
  return d;
}

}  // namespace doublon
