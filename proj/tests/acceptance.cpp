// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "doublon/doublon.hpp"

using doublon::Json;

namespace {

struct Check {
  std::string name;
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!") + what);
  }
};

std::string num(double v) { return doublon::format_g12(v); }

Json run_config(const std::string& text) {
  return doublon::run(doublon::parse_config_text(text)).bundle;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string lattice(int lx, int ly, const char* bx, const char* by) {
  std::ostringstream os;
  os << R"("lattice": {"Lx": )" << lx << R"(, "Ly": )" << ly << R"(, "bc_x": ")" << bx << R"(", "bc_y": ")" << by
     << R"("})";
  return os.str();
}

const char* kFig2 = R"("params": {"J": 1, "t": 2, "P": 4, "U": 8})";

std::string config(const char* experiment, const std::string& lat, const std::string& params,
                   const std::string& extra = "") {
  return std::string(R"({"schema_version": 1, "experiment": ")") + experiment + "\", " + lat + ", " + params + extra +
         "}";
}

const double kThetaW = doublon::Thresholds{}.corner;

// --- criteria -------------------------------------------------------------

void hermitian_limit(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json b = run_config(config("spectrum", lattice(6, 6, "open", "open"), R"("params": {"J": 1, "t": 0, "P": 4, "U": 8})",
                                   R"(, "solver": {"mode": "dense"}, "options": {"grids": "none"})"));
  const double dt = seconds_since(t0);
  double im = 0.0;
  for (const auto& s : b["states"]) im = std::max(im, std::abs(s["E"][1].get<double>()));
  c.require(b["solver"]["method"] == "dense", "dense");
  c.require(im < 1e-10, "max|Im E|=" + num(im));
  c.require(dt < 30.0, "runtime " + num(dt) + " s");
}

void spectral_partition(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  // odd Lx cannot close periodically; 8x8 is the nearest periodic lattice
  const Json b = run_config(config("spectrum", lattice(8, 8, "periodic", "periodic"), kFig2,
                                   R"(, "solver": {"mode": "dense"}, "options": {"grids": "none"})"));
  const double dt = seconds_since(t0);
  const Json& p = b["partition"];
  const double J = 1, t = 2, U = 8;
  const bool dre = !p["doublon_re"].is_null() && p["doublon_re"][0].get<double>() >= -2 * U - 6 * J &&
                   p["doublon_re"][1].get<double>() <= -2 * U + 6 * J;
  c.require(p["doublon_count"].get<long long>() > 0 && dre,
            "doublons=" + p["doublon_count"].dump() + " Re in " + p["doublon_re"].dump());
  const bool sre = !p["scattering_abs_re_max"].is_null() && p["scattering_abs_re_max"].get<double>() <= 4 * J + 2 * t;
  c.require(p["scattering_count"].get<long long>() > 0 && sre,
            "scattering=" + p["scattering_count"].dump() + " max|Re|=" + p["scattering_abs_re_max"].dump());
  const bool gap = !b["gap_window"].is_null() && b["gap_window"]["gap"].get<double>() > 0;
  c.require(gap, "gap=" + (gap ? num(b["gap_window"]["gap"].get<double>()) : std::string("none")));
  c.require(dt < 600.0, "runtime " + num(dt) + " s");
}

void boundary_phenomenology(Check& c) {
  const std::string opts = R"(, "solver": {"mode": "targeted"}, "options": {"grids": "none"})";
  const Json y_open = run_config(config("spectrum", lattice(8, 8, "periodic", "open"), kFig2, opts));
  c.require(y_open["in_gap"].empty(), "y-OBC in-gap=" + std::to_string(y_open["in_gap"].size()));

  const Json x_open = run_config(config("spectrum", lattice(9, 8, "open", "periodic"), kFig2, opts));
  double right = 1.0;
  for (const auto& s : x_open["in_gap"]) right = std::min(right, s["right_columns_n_fraction"].get<double>());
  c.require(!x_open["in_gap"].empty() && right >= 0.7,
            "x-OBC in-gap=" + std::to_string(x_open["in_gap"].size()) + " min right=" + num(right));

  const Json full = run_config(config("spectrum", lattice(9, 8, "open", "open"), kFig2, opts));
  double top = 1.0, w = 1.0;
  for (const auto& s : full["in_gap"]) {
    top = std::min(top, s["top_right_m_fraction"].get<double>());
    w = std::min(w, s["corner_weight"].get<double>());
  }
  c.require(!full["in_gap"].empty() && top >= 0.5 && w >= kThetaW,
            "full OBC in-gap=" + std::to_string(full["in_gap"].size()) + " min top-right=" + num(top) +
                " min w=" + num(w));
}

void winding(Check& c) {
  const Json b = run_config(config("winding", lattice(9, 8, "open", "twisted"), kFig2,
                                   R"(, "options": {"E_ref": "auto", "energies": [[100, 0], [-60, 0]]})"));
  const auto& r = b["results"];
  c.require(r[0]["W"] == 2, "W(E_ref=" + b["E_ref"]["E"].dump() + ")=" + r[0]["W"].dump());
  c.require(r[1]["W"] == 0 && r[2]["W"] == 0, "W outside bands=" + r[1]["W"].dump() + "," + r[2]["W"].dump());
  c.require(b["refinement_check"]["invariant"].get<bool>(),
            "refined n_phi=" + b["refinement_check"]["n_phi"].dump() + " W=" + b["refinement_check"]["W"].dump());
}

void enclosure(Check& c) {
  const Json full = run_config(config("spectrum", lattice(9, 8, "open", "open"), kFig2,
                                      R"(, "solver": {"mode": "targeted"}, "options": {"grids": "none"})"));
  Json energies = Json::array();
  for (const auto& s : full["in_gap"]) {
    if (s["class"] == "in_gap_corner") energies.push_back(s["E"]);
  }
  c.require(!energies.empty(), "corner energies=" + std::to_string(energies.size()));
  if (energies.empty()) return;
  Json rest = Json::array();
  for (std::size_t i = 1; i < energies.size(); ++i) rest.push_back(energies[i]);
  const Json b = run_config(config("winding", lattice(9, 8, "open", "twisted"), kFig2,
                                   ", \"options\": {\"E_ref\": " + energies[0].dump() + ", \"energies\": " + rest.dump() +
                                       ", \"refinement_check\": false}"));
  int zero = 0;
  std::string ws;
  for (const auto& r : b["results"]) {
    if (r["W"] == 0) ++zero;
    ws += (ws.empty() ? "" : ",") + r["W"].dump();
  }
  c.require(zero == 0, "W=[" + ws + "]");
}

void scaling(Check& c) {
  const Json b = run_config(config("scaling", lattice(9, 4, "open", "open"), kFig2,
                                   R"(, "solver": {"mode": "targeted"}, "options": {"Ly_values": [4, 6, 8, 10]})"));
  std::string nc;
  for (const auto& p : b["points"]) nc += (nc.empty() ? "" : ",") + p["in_gap_corner"].dump();
  c.require(b["strictly_increasing"].get<bool>(), "N_c=[" + nc + "]");
  c.require(b["fit"]["r2"].get<double>() >= 0.99, "R2=" + num(b["fit"]["r2"].get<double>()));
  // N_c << Lx*Ly taken as at most a fifth of the sites
  c.require(b["max_corner_fraction"].get<double>() <= 0.2,
            "max N_c/sites=" + num(b["max_corner_fraction"].get<double>()));
}

void effective_agreement(Check& c, Json& u8, Json& u40) {
  const std::string opts = R"(, "solver": {"mode": "targeted"}, "options": {"projector_check": true})";
  u8 = run_config(config("effective_compare", lattice(9, 8, "open", "open"), R"("params": {"J": 1, "t": 2, "P": 4, "U": 8})",
                         opts));
  u40 = run_config(
      config("effective_compare", lattice(9, 8, "open", "open"), R"("params": {"J": 1, "t": 2, "P": 4, "U": 40})", opts));
  const double d8 = u8["max_abs"].get<double>(), d40 = u40["max_abs"].get<double>();
  c.require(!u8["size_mismatch"].get<bool>() && !u40["size_mismatch"].get<bool>(),
            "matched " + u8["doublon_states"].dump() + "/" + u8["effective_states"].dump());
  c.require(d8 <= 0.05, "max|dE|(U=8)=" + num(d8));
  c.require(d40 > 0 && d8 / d40 >= 5.0, "U=40 " + num(d40) + " ratio " + num(d8 / d40));
}

void projector(Check& c, const Json& b98) {
  const Json b54 = run_config(config("effective_compare", lattice(5, 4, "open", "open"), kFig2,
                                     R"(, "options": {"projector_check": true})"));
  for (const auto* b : {&b54, &b98}) {
    const Json& d = (*b)["projector_max_diff"];
    const auto& lat = (*b)["config"]["lattice"];
    c.require(!d.is_null() && d.get<double>() <= 1e-12,
              lat["Lx"].dump() + "x" + lat["Ly"].dump() + " diff=" + (d.is_null() ? "null" : num(d.get<double>())));
  }
}

void edge_analytic(Check& c) {
  const Json b = run_config(config("edge_analytic", lattice(5, 4, "open", "open"), R"("params": {"J": 1, "t": 0, "P": 4, "U": 8})",
                                   R"(, "options": {"L": 41, "P_values": [4, -1, -0.2], "U_values": [8, 6]})"));
  double eig = 0.0, decay = 0.0;
  bool absence = true, counts = true;
  for (const auto& cs : b["cases"]) {
    for (const char* br : {"plus", "minus"}) {
      const Json& x = cs[br];
      if (!x["exists"].get<bool>()) continue;
      eig = std::max(eig, x["abs_error"].get<double>());
      decay = std::max(decay, x["decay_rel_error"].get<double>());
    }
    absence = absence && cs["minus"]["exists"] == cs["minus_expected"];
    counts = counts && cs["ed_right_localized"] == cs["branches_existing"];
  }
  c.require(eig <= 1e-8, "max|eps-ED|=" + num(eig));
  c.require(decay <= 0.01, "max decay rel err=" + num(decay));
  c.require(absence, "minus-branch absence rule");
  c.require(counts, "right-localized ED states = branch count");
}

void null_tests(Check& c) {
  const Json b = run_config(config("null_tests", lattice(9, 8, "open", "open"), kFig2, R"(, "solver": {"mode": "targeted"})"));
  for (const auto& r : b["cases"]) {
    const double w = r["max_corner_weight"].get<double>();
    const long long nc = r["counts"]["in_gap_corner"].get<long long>();
    c.require(w < kThetaW && nc == 0, r["case"].get<std::string>() + " max w=" + num(w) + " corners=" + std::to_string(nc));
  }
}

void tamm_shockley(Check& c) {
  // J^2/U = 0.125
  const Json b = run_config(config("potential_sweep", lattice(9, 8, "open", "open"), kFig2,
                                   R"(, "solver": {"mode": "targeted"}, "options": {"V_values": [0, 0.0625, 0.125, 0.1875, 0.25]})"));
  const Json& pts = b["points"];
  const Json& clean = pts[0];
  const Json& at = pts[2];
  c.require(clean["in_gap_corner"].get<long long>() > 0, "clean corners=" + clean["in_gap_corner"].dump());
  c.require(at["in_gap_corner"] == clean["in_gap_corner"] && !at["min_corner_weight"].is_null() &&
                at["min_corner_weight"].get<double>() >= kThetaW,
            "V=J^2/U corners=" + at["in_gap_corner"].dump() + " min w=" + at["min_corner_weight"].dump());
  c.require(b["corner_count_constant"].get<bool>(), "count constant over sweep");
  c.require(b["never_in_band"].get<bool>(), "never in band");
}

void disorder(Check& c) {
  const struct {
    const char* params;
    const char* W;
  } regimes[] = {{R"("params": {"J": 1, "t": 2, "P": 4, "U": 8})", "2"},
                 {R"("params": {"J": 1, "t": 0.5, "P": -1, "U": 6})", "0.3"}};
  for (const auto& r : regimes) {
    const Json b = run_config(config("disorder_ensemble", lattice(9, 8, "open", "open"), r.params,
                                     std::string(R"(, "disorder": {"W": )") + r.W +
                                         R"(, "seed": 1}, "solver": {"mode": "targeted"}, "options": {"n_seeds": 10})"));
    const Json& s = b["summary"];
    c.require(b["clean"]["in_gap_corner"].get<long long>() > 0 && s["all_equal_clean"].get<bool>() &&
                  s["all_localized"].get<bool>(),
              std::string("W=") + r.W + " clean=" + b["clean"]["in_gap_corner"].dump() + " seeds min/max=" +
                  s["min"].dump() + "/" + s["max"].dump() + " localized=" + s["all_localized"].dump());
  }
}

void three_body(Check& c) {
  const Json b = run_config(config("three_body", lattice(5, 4, "open", "open"),
                                   R"("params": {"J": 1, "t": 1, "P": 6, "U": 6, "N": 3})", R"(, "solver": {"mode": "dense"})"));
  double best = 0.0;
  for (const auto& band : b["bands"]) best = std::max(best, band["min_top_right_n_fraction"].get<double>());
  c.require(b["corner_bands"].get<long long>() >= 1,
            "corner bands=" + b["corner_bands"].dump() + " best min top-right n=" + num(best));
}

void determinism(Check& c) {
  const std::vector<std::string> cfgs = {
      config("spectrum", lattice(5, 4, "open", "open"), kFig2,
             R"(, "disorder": {"W": 1, "seed": 5}, "solver": {"mode": "targeted"}, "options": {"grids": "in_gap"})"),
      config("winding", lattice(5, 4, "open", "twisted"), kFig2),
      config("disorder_ensemble", lattice(5, 4, "open", "open"), kFig2,
             R"(, "disorder": {"W": 0.5, "seed": 2}, "options": {"n_seeds": 3})"),
  };
  for (const auto& text : cfgs) {
    const auto cfg = doublon::parse_config_text(text);
    const auto a = doublon::run(cfg), b = doublon::run(cfg, doublon::RunOptions{2});
    bool same = doublon::to_json_text(a.bundle) == doublon::to_json_text(b.bundle) && a.files.size() == b.files.size();
    for (std::size_t i = 0; same && i < a.files.size(); ++i) {
      same = a.files[i].path == b.files[i].path && a.files[i].contents == b.files[i].contents;
    }
    c.require(same, doublon::to_string(cfg.experiment));
  }
}

}  // namespace

int main() {
  std::vector<Check> checks;
  bool all = true;
  auto crit = [&](const std::string& name, const std::function<void(Check&)>& f) {
    Check c{name};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      f(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    std::string notes;
    for (const auto& n : c.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::printf("%s %-26s [%s] (%.1f s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), notes.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    all = all && c.pass;
  };

  Json u8, u40;
  crit("hermitian_limit", hermitian_limit);
  crit("spectral_partition", spectral_partition);
  crit("boundary_phenomenology", boundary_phenomenology);
  crit("winding", winding);
  crit("enclosure", enclosure);
  crit("scaling", scaling);
  crit("effective_agreement", [&](Check& c) { effective_agreement(c, u8, u40); });
  crit("perturbation_projector", [&](Check& c) { projector(c, u8); });
  crit("analytic_edge", edge_analytic);
  crit("null_tests", null_tests);
  crit("tamm_shockley", tamm_shockley);
  crit("disorder", disorder);
  crit("three_body", three_body);
  crit("determinism", determinism);
  return all ? 0 : 1;
}
