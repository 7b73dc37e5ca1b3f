#pragma once

// Experiment configuration: JSON in, validated ExperimentConfig out. Unknown
// keys anywhere are rejected.
//
// {
//   "schema_version": 1,
//   "experiment": "spectrum",
//   "lattice":    {"Lx": 9, "Ly": 8, "bc_x": "open", "bc_y": "twisted", "twist": 0.0},
//   "params":     {"J": 1, "t": 2, "P": 4, "U": 8, "V": 0, "N": 2, "edge_form": "two_body"},
//   "disorder":   {"W": 2, "seed": 1, "correlation": "literal", "halve_pair": false},
//   "solver":     {"mode": "auto", "sigma": [-16, 0], "k": 80, "residual_tol": 1e-6,
//                 "dense_fallback": true},
//   "thresholds": {"doublon": 0.5, "corner": 0.25, "xi": 1, "metric": "euclidean"},
//   "output_dir": "out",
//   "options":    {...}   // per experiment, see option_keys()
// }

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doublon/errors.hpp"
#include "doublon/json_out.hpp"
#include "doublon/lattice.hpp"
#include "doublon/model.hpp"
#include "doublon/observables.hpp"
#include "doublon/pipeline.hpp"

namespace doublon {

inline constexpr int kSchemaVersion = 1;

enum class Experiment {
  spectrum,
  densities,
  winding,
  scaling,
  effective_compare,
  edge_analytic,
  disorder_ensemble,
  potential_sweep,
  three_body,
  null_tests
};

inline const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::string>> names = {
      {Experiment::spectrum, "spectrum"},
      {Experiment::densities, "densities"},
      {Experiment::winding, "winding"},
      {Experiment::scaling, "scaling"},
      {Experiment::effective_compare, "effective_compare"},
      {Experiment::edge_analytic, "edge_analytic"},
      {Experiment::disorder_ensemble, "disorder_ensemble"},
      {Experiment::potential_sweep, "potential_sweep"},
      {Experiment::three_body, "three_body"},
      {Experiment::null_tests, "null_tests"}};
  return names;
}

inline std::string to_string(Experiment e) {
  for (const auto& [k, v] : experiment_names()) {
    if (k == e) return v;
  }
  return "spectrum";
}

inline Experiment experiment_from_string(const std::string& s) {
  for (const auto& [k, v] : experiment_names()) {
    if (v == s) return k;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

/// Allowed option keys per experiment.
inline const std::set<std::string>& option_keys(Experiment e) {
  static const std::map<Experiment, std::set<std::string>> keys = {
      {Experiment::spectrum, {"gap", "grids"}},
      {Experiment::densities, {"gap", "grids"}},
      {Experiment::winding, {"E_ref", "energies", "n_phi", "max_n_phi", "reverse", "refinement_check"}},
      {Experiment::scaling, {"Ly_values"}},
      {Experiment::effective_compare, {"projector_check"}},
      {Experiment::edge_analytic, {"L", "P_values", "U_values"}},
      {Experiment::disorder_ensemble, {"n_seeds", "seeds"}},
      {Experiment::potential_sweep, {"V_values"}},
      {Experiment::three_body, {"band_gap", "patch", "fraction"}},
      {Experiment::null_tests, {"cases"}}};
  return keys.at(e);
}

struct LatticeConfig {
  int Lx = 0;
  int Ly = 0;
  BoundaryKind bc_x = BoundaryKind::open;
  BoundaryKind bc_y = BoundaryKind::open;
  double twist = 0.0;  // applies to every twisted boundary

  Boundary boundary(BoundaryKind k) const { return {k, k == BoundaryKind::twisted ? twist : 0.0}; }
  LatticeSpec build() const { return build_lattice(Lx, Ly, boundary(bc_x), boundary(bc_y)); }
};

struct DisorderConfig {
  double W = 0.0;
  std::uint64_t seed = 0;
  DisorderCorrelation correlation = DisorderCorrelation::literal;
  bool halve_pair = false;

  DisorderRealization sample(const LatticeSpec& lat, std::uint64_t s) const {
    DisorderRealization d = sample_disorder(lat, W, s, correlation);
    d.halve_pair_amplitude = halve_pair;
    return d;
  }
};

struct ExperimentConfig {
  Experiment experiment = Experiment::spectrum;
  LatticeConfig lattice;
  ModelParams params;
  std::optional<DisorderConfig> disorder;
  SolverConfig solver;
  Thresholds thresholds;
  std::string output_dir = "out";
  Json options = Json::object();

  std::optional<DisorderRealization> disorder_realization(const LatticeSpec& lat) const {
    if (!disorder) return std::nullopt;
    return disorder->sample(lat, disorder->seed);
  }
};

namespace detail {

inline void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown field '" + it.key() + "' in " + where);
  }
}

inline double get_number(const Json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

inline long long get_integer(const Json& obj, const char* key, long long fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long long>();
}

inline std::uint64_t get_seed(const Json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(where + " must be a non-negative integer");
}

inline std::string get_string(const Json& obj, const char* key, const std::string& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

inline bool get_bool(const Json& obj, const char* key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return v.get<bool>();
}

inline cplx get_complex(const Json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ConfigError(where + " must be a number or a [re, im] pair");
}

}  // namespace detail

/// Typed access to the experiment options.
struct Options {
  const Json& j;
  std::string where = "options";

  bool has(const char* key) const { return j.contains(key); }
  double number(const char* key, double fallback) const { return detail::get_number(j, key, fallback, where); }
  long long integer(const char* key, long long fallback) const { return detail::get_integer(j, key, fallback, where); }
  bool boolean(const char* key, bool fallback) const { return detail::get_bool(j, key, fallback, where); }
  std::string string(const char* key, const std::string& fallback) const {
    return detail::get_string(j, key, fallback, where);
  }
  std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + " must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where + "." + key + " must be a list of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<long long> integers(const char* key, std::vector<long long> fallback) const {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + " must be a list of integers");
    std::vector<long long> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(where + "." + key + " must be a list of integers");
      out.push_back(e.get<long long>());
    }
    return out;
  }
  std::vector<cplx> complexes(const char* key) const {
    std::vector<cplx> out;
    if (!j.contains(key)) return out;
    const Json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + " must be a list");
    for (const auto& e : v) out.push_back(detail::get_complex(e, where + "." + key));
    return out;
  }
};

inline ExperimentConfig parse_config(const Json& root) {
  using namespace detail;
  check_keys(root,
             {"schema_version", "experiment", "lattice", "params", "disorder", "solver", "thresholds", "output_dir",
              "options"},
             "config");
  if (!root.contains("schema_version")) throw ConfigError("config.schema_version is required");
  if (get_integer(root, "schema_version", 0, "config") != kSchemaVersion) {
    throw ConfigError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  for (const char* key : {"experiment", "lattice", "params"}) {
    if (!root.contains(key)) throw ConfigError(std::string("config.") + key + " is required");
  }

  ExperimentConfig c;
  c.experiment = experiment_from_string(get_string(root, "experiment", "", "config"));

  const Json& lat = root.at("lattice");
  check_keys(lat, {"Lx", "Ly", "bc_x", "bc_y", "twist"}, "lattice");
  if (!lat.contains("Lx") || !lat.contains("Ly")) throw ConfigError("lattice.Lx and lattice.Ly are required");
  c.lattice.Lx = static_cast<int>(get_integer(lat, "Lx", 0, "lattice"));
  c.lattice.Ly = static_cast<int>(get_integer(lat, "Ly", 0, "lattice"));
  c.lattice.bc_x = boundary_kind_from_string(get_string(lat, "bc_x", "open", "lattice"));
  c.lattice.bc_y = boundary_kind_from_string(get_string(lat, "bc_y", "open", "lattice"));
  c.lattice.twist = get_number(lat, "twist", 0.0, "lattice");
  c.lattice.build();  // geometry errors surface here

  const Json& par = root.at("params");
  check_keys(par, {"J", "t", "P", "U", "V", "N", "edge_form"}, "params");
  c.params.J = get_number(par, "J", 1.0, "params");
  c.params.t = get_number(par, "t", 0.0, "params");
  c.params.P = get_number(par, "P", 0.0, "params");
  c.params.U = get_number(par, "U", 0.0, "params");
  c.params.V = get_number(par, "V", 0.0, "params");
  c.params.N = static_cast<int>(get_integer(par, "N", 2, "params"));
  const std::string form = get_string(par, "edge_form", "two_body", "params");
  if (form == "two_body") {
    c.params.edge_form = EdgePotentialForm::two_body;
  } else if (form == "single_particle") {
    c.params.edge_form = EdgePotentialForm::single_particle;
  } else {
    throw ConfigError("params.edge_form must be two_body or single_particle");
  }
  c.params.validate();

  if (root.contains("disorder")) {
    const Json& d = root.at("disorder");
    check_keys(d, {"W", "seed", "correlation", "halve_pair"}, "disorder");
    if (!d.contains("W")) throw ConfigError("disorder.W is required");
    DisorderConfig dc;
    dc.W = get_number(d, "W", 0.0, "disorder");
    if (!(dc.W >= 0.0)) throw ConfigError("disorder.W must be non-negative");
    if (d.contains("seed")) dc.seed = get_seed(d.at("seed"), "disorder.seed");
    const std::string corr = get_string(d, "correlation", "literal", "disorder");
    if (corr == "literal") {
      dc.correlation = DisorderCorrelation::literal;
    } else if (corr == "per_bond") {
      dc.correlation = DisorderCorrelation::per_bond;
    } else {
      throw ConfigError("disorder.correlation must be literal or per_bond");
    }
    dc.halve_pair = get_bool(d, "halve_pair", false, "disorder");
    c.disorder = dc;
  }

  if (root.contains("solver")) {
    const Json& s = root.at("solver");
    check_keys(s, {"mode", "sigma", "k", "residual_tol", "dense_fallback"}, "solver");
    const std::string mode = get_string(s, "mode", "auto", "solver");
    if (mode == "auto") {
      c.solver.mode = SolverConfig::Mode::automatic;
    } else if (mode == "dense") {
      c.solver.mode = SolverConfig::Mode::dense;
    } else if (mode == "targeted") {
      c.solver.mode = SolverConfig::Mode::targeted;
    } else {
      throw ConfigError("solver.mode must be auto, dense or targeted");
    }
    if (s.contains("sigma")) c.solver.sigma = get_complex(s.at("sigma"), "solver.sigma");
    if (s.contains("k")) {
      const long long k = get_integer(s, "k", 0, "solver");
      if (k < 1) throw ConfigError("solver.k must be positive");
      c.solver.k = static_cast<int>(k);
    }
    if (s.contains("residual_tol")) {
      const double tol = get_number(s, "residual_tol", 0.0, "solver");
      if (!(tol > 0.0)) throw ConfigError("solver.residual_tol must be positive");
      c.solver.residual_tol = tol;
    }
    c.solver.dense_fallback = get_bool(s, "dense_fallback", true, "solver");
  }

  if (root.contains("thresholds")) {
    const Json& t = root.at("thresholds");
    check_keys(t, {"doublon", "corner", "xi", "metric"}, "thresholds");
    c.thresholds.doublon = get_number(t, "doublon", c.thresholds.doublon, "thresholds");
    c.thresholds.corner = get_number(t, "corner", c.thresholds.corner, "thresholds");
    c.thresholds.xi = get_number(t, "xi", c.thresholds.xi, "thresholds");
    if (!(c.thresholds.xi > 0.0)) throw ConfigError("thresholds.xi must be positive");
    const std::string metric = get_string(t, "metric", "euclidean", "thresholds");
    if (metric == "euclidean") {
      c.thresholds.metric = DistanceMetric::euclidean;
    } else if (metric == "manhattan") {
      c.thresholds.metric = DistanceMetric::manhattan;
    } else {
      throw ConfigError("thresholds.metric must be euclidean or manhattan");
    }
  }

  c.output_dir = get_string(root, "output_dir", "out", "config");
  if (root.contains("options")) {
    check_keys(root.at("options"), option_keys(c.experiment), "options");
    c.options = root.at("options");
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string to_string(SolverConfig::Mode m) {
  switch (m) {
    case SolverConfig::Mode::dense: return "dense";
    case SolverConfig::Mode::targeted: return "targeted";
    default: return "auto";
  }
}

/// Normalized echo of a config with every default filled in. output_dir is
/// left out so that bundles written to different places compare equal.
inline Json config_echo(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = to_string(c.experiment);
  j["lattice"] = {{"Lx", c.lattice.Lx},
                  {"Ly", c.lattice.Ly},
                  {"bc_x", to_string(c.lattice.bc_x)},
                  {"bc_y", to_string(c.lattice.bc_y)},
                  {"twist", c.lattice.twist}};
  j["params"] = {{"J", c.params.J},
                 {"t", c.params.t},
                 {"P", c.params.P},
                 {"U", c.params.U},
                 {"V", c.params.V},
                 {"N", c.params.N},
                 {"edge_form", c.params.edge_form == EdgePotentialForm::two_body ? "two_body" : "single_particle"}};
  if (c.disorder) {
    j["disorder"] = {{"W", c.disorder->W},
                     {"seed", c.disorder->seed},
                     {"correlation", c.disorder->correlation == DisorderCorrelation::literal ? "literal" : "per_bond"},
                     {"halve_pair", c.disorder->halve_pair}};
  } else {
    j["disorder"] = nullptr;
  }
  Json s;
  s["mode"] = to_string(c.solver.mode);
  s["sigma"] = c.solver.sigma ? complex_pair(*c.solver.sigma) : Json(nullptr);
  s["k"] = c.solver.k ? Json(*c.solver.k) : Json(nullptr);
  s["residual_tol"] = c.solver.residual_tol ? Json(*c.solver.residual_tol) : Json(nullptr);
  s["dense_fallback"] = c.solver.dense_fallback;
  j["solver"] = s;
  j["thresholds"] = {{"doublon", c.thresholds.doublon},
                     {"corner", c.thresholds.corner},
                     {"xi", c.thresholds.xi},
                     {"metric", c.thresholds.metric == DistanceMetric::euclidean ? "euclidean" : "manhattan"}};
  j["options"] = c.options;
  return j;
}

}  // namespace doublon
