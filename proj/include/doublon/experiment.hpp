#pragma once

// Named experiments over the library, their result bundles and the files they
// write.
//
//   run(config)   -> RunOutput: result.json body, timings, side files (CSV grids,
//                    optional matrix dump), all in memory
//   write_outputs -> lays a RunOutput out under a directory
//   sweep         -> one RunOutput per value of a scalar coupling
//
// result.json holds nothing time- or path-dependent; timings go to
// timings.json.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "doublon/config.hpp"
#include "doublon/effective.hpp"
#include "doublon/json_out.hpp"
#include "doublon/observables.hpp"
#include "doublon/pipeline.hpp"
#include "doublon/topology.hpp"

namespace doublon {

struct RunOptions {
  int threads = 1;
  bool dump_matrix = false;
  std::optional<std::uint64_t> seed;  // replaces disorder.seed
};

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string contents;
};

struct RunOutput {
  Json bundle;
  Json timings = Json::object();
  std::vector<OutputFile> files;
};

/// f(i) for i in [0, n) on up to `threads` workers; results in input order.
/// The first exception by index is rethrown.
template <typename F>
auto parallel_map(std::size_t n, int threads, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t nworkers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

namespace detail {

class StageTimer {
 public:
  template <typename F>
  auto time(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, t0);
    } else {
      auto r = f();
      record(name, t0);
      return r;
    }
  }
  Json json() const {
    Json j;
    j["stages"] = stages_;
    j["total_seconds"] = total_;
    return j;
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::lock_guard lock(mu_);
    stages_.push_back({{"stage", name}, {"seconds", s}});
    total_ += s;
  }
  std::mutex mu_;
  Json stages_ = Json::array();
  double total_ = 0.0;
};

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& run;
  StageTimer timer;
  std::vector<OutputFile> files;
  std::mutex files_mu;

  void add_file(std::string path, std::string contents) {
    std::lock_guard lock(files_mu);
    files.push_back({std::move(path), std::move(contents)});
  }
};

inline Json gap_json(const std::optional<GapWindow>& g) {
  if (!g) return nullptr;
  Json j;
  j["re"] = Json::array({g->re_lo, g->re_hi});
  j["im"] = Json::array({g->im_lo, g->im_hi});
  j["band_lower_top"] = g->band_lower_top;
  j["band_upper_bottom"] = g->band_upper_bottom;
  j["gap"] = g->gap();
  return j;
}

inline std::string method_name(SolveMethod m) { return m == SolveMethod::dense ? "dense" : "targeted"; }

inline Json solver_json(const SolvedProblem& run, const SolverConfig& cfg) {
  Json j;
  j["method"] = method_name(run.solution.method);
  j["dimension"] = static_cast<long long>(run.basis.size());
  j["eigenpairs"] = static_cast<long long>(run.solution.size());
  if (run.solution.method == SolveMethod::targeted) {
    j["sigma"] = complex_pair(run.solution.sigma);
    j["k"] = run.solution.k;
  }
  j["max_residual"] = run.solution.max_residual();
  j["residual_bound"] = cfg.tolerance(run.solution.method) * std::max(run.h.frobenius_norm(), 1.0);
  return j;
}

struct GapResult {
  std::optional<GapWindow> window;
  std::string error;
};

/// Gap window of the clean periodic reference; NoGapError is recorded, not
/// thrown.
inline GapResult reference_gap(Context& ctx, const ModelParams& p, const LatticeSpec& lat, const std::string& stage) {
  GapResult g;
  try {
    g.window = ctx.timer.time(stage, [&] { return gap_window(p, lat, ctx.cfg.solver, ctx.cfg.thresholds); });
  } catch (const NoGapError& e) {
    g.error = e.what();
  }
  return g;
}

inline SolvedProblem solve_stage(Context& ctx, const std::string& stage, const ModelParams& p, const LatticeSpec& lat,
                                 const std::optional<DisorderRealization>& dis) {
  return ctx.timer.time(stage, [&] { return solve(Problem{p, lat, dis}, ctx.cfg.solver); });
}

inline std::string grid_csv(const ObservableGrid& g) {
  std::ostringstream os;
  write_grid_csv(g, os);
  return os.str();
}

inline std::string index_tag(std::size_t j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", j);
  return buf;
}

enum class GridSelection { none, in_gap, doublon, all };

inline GridSelection grid_selection(const std::string& s) {
  if (s == "none") return GridSelection::none;
  if (s == "in_gap") return GridSelection::in_gap;
  if (s == "doublon") return GridSelection::doublon;
  if (s == "all") return GridSelection::all;
  throw ConfigError("options.grids must be none, in_gap, doublon or all");
}

inline bool is_in_gap(StateClass c) { return c == StateClass::in_gap_edge || c == StateClass::in_gap_corner; }

inline Json counts_json(const std::vector<StateRecord>& rec) {
  Json j;
  for (StateClass c :
       {StateClass::scattering, StateClass::doublon_bulk, StateClass::in_gap_edge, StateClass::in_gap_corner}) {
    j[to_string(c)] = static_cast<long long>(count_class(rec, c));
  }
  return j;
}

inline Json state_json(std::size_t j, const StateRecord& r) {
  Json s;
  s["index"] = static_cast<long long>(j);
  s["E"] = complex_pair(r.E);
  s["doublon_weight"] = r.doublon_weight;
  s["corner_weight"] = r.corner_weight;
  s["ipr"] = r.ipr;
  s["residual"] = r.residual;
  s["class"] = to_string(r.cls);
  return s;
}

/// Spectrum, state records, class counts, in-gap localization data and CSV
/// grids for one solved two-body problem. `prefix` namespaces the grid files.
inline Json analyze(Context& ctx, const SolvedProblem& run, const LatticeSpec& lat, const std::optional<GapWindow>& gap,
                    GridSelection grids, const std::string& prefix) {
  const Thresholds& th = ctx.cfg.thresholds;
  const auto rec = classify(run.solution, run.basis, lat, gap ? &*gap : nullptr, th);

  Json spectrum = Json::array(), states = Json::array(), in_gap = Json::array();
  for (std::size_t j = 0; j < rec.size(); ++j) {
    const StateRecord& r = rec[j];
    spectrum.push_back(complex_pair(r.E));
    Json s = state_json(j, r);

    const bool want = grids == GridSelection::all || (grids == GridSelection::doublon && r.doublon_weight >= th.doublon) ||
                      (grids == GridSelection::in_gap && is_in_gap(r.cls));
    const bool ingap = is_in_gap(r.cls);
    if (want || ingap) {
      const auto psi = run.solution.right_vectors.col(static_cast<Eigen::Index>(j));
      const ObservableGrid n = density_n(psi, run.basis, lat);
      const ObservableGrid m = density_m(psi, run.basis, lat);
      if (want) {
        const std::string base = "grids/" + prefix + "state_" + index_tag(j);
        ctx.add_file(base + "_n.csv", grid_csv(n));
        ctx.add_file(base + "_m.csv", grid_csv(m));
        s["grids"] = Json::array({base + "_n.csv", base + "_m.csv"});
      }
      if (ingap) {
        Json g;
        g["index"] = static_cast<long long>(j);
        g["E"] = complex_pair(r.E);
        g["class"] = to_string(r.cls);
        g["corner_weight"] = r.corner_weight;
        g["right_columns_n_fraction"] = right_columns_fraction(n, 2);
        g["top_right_m_fraction"] = top_right_fraction(m, 3);
        in_gap.push_back(g);
      }
    }
    states.push_back(s);
  }

  // doublon-dominated and scattering-dominated extents
  double d_lo = INFINITY, d_hi = -INFINITY, s_abs = 0.0;
  long long nd = 0, ns = 0;
  for (const auto& r : rec) {
    if (r.doublon_weight > 0.9) {
      d_lo = std::min(d_lo, r.E.real());
      d_hi = std::max(d_hi, r.E.real());
      ++nd;
    } else if (r.doublon_weight < 0.1) {
      s_abs = std::max(s_abs, std::abs(r.E.real()));
      ++ns;
    }
  }
  Json partition;
  partition["doublon_count"] = nd;
  partition["doublon_re"] = nd ? Json::array({d_lo, d_hi}) : Json(nullptr);
  partition["scattering_count"] = ns;
  partition["scattering_abs_re_max"] = ns ? Json(s_abs) : Json(nullptr);

  Json out;
  out["counts"] = counts_json(rec);
  out["partition"] = partition;
  out["in_gap"] = in_gap;
  out["spectrum"] = spectrum;
  out["states"] = states;
  return out;
}

inline Json header(const ExperimentConfig& cfg) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = to_string(cfg.experiment);
  j["config"] = config_echo(cfg);
  return j;
}

// ---- experiments -----------------------------------------------------------

inline Json run_spectrum(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const LatticeSpec lat = cfg.lattice.build();
  const auto dis = cfg.disorder_realization(lat);
  Json out = header(cfg);

  const std::string gap_mode = opt.string("gap", "reference");
  if (gap_mode != "reference" && gap_mode != "none") throw ConfigError("options.gap must be reference or none");
  GapResult gap;
  if (gap_mode == "reference") gap = reference_gap(ctx, cfg.params, lat, "reference_gap");

  const SolvedProblem run = solve_stage(ctx, "solve", cfg.params, lat, dis);
  out["solver"] = solver_json(run, cfg.solver);
  out["gap_window"] = gap_json(gap.window);
  out["gap_error"] = gap.error.empty() ? Json(nullptr) : Json(gap.error);
  Json a = ctx.timer.time("observables", [&] {
    return analyze(ctx, run, lat, gap.window, grid_selection(opt.string("grids", "in_gap")), "");
  });
  for (auto it = a.begin(); it != a.end(); ++it) out[it.key()] = it.value();

  if (cfg.experiment == Experiment::densities) {
    double right = INFINITY, top_right = INFINITY, wmax = 0.0;
    for (const auto& g : out["in_gap"]) {
      right = std::min(right, g["right_columns_n_fraction"].get<double>());
      top_right = std::min(top_right, g["top_right_m_fraction"].get<double>());
      wmax = std::max(wmax, g["corner_weight"].get<double>());
    }
    const bool any = !out["in_gap"].empty();
    Json loc;
    loc["in_gap_count"] = static_cast<long long>(out["in_gap"].size());
    loc["min_right_columns_n_fraction"] = any ? Json(right) : Json(nullptr);
    loc["min_top_right_m_fraction"] = any ? Json(top_right) : Json(nullptr);
    loc["max_corner_weight"] = any ? Json(wmax) : Json(nullptr);
    out["localization"] = loc;
  }
  return out;
}

inline Json winding_json(const WindingResult& w) {
  Json j;
  j["E"] = complex_pair(w.E_ref);
  j["W"] = w.W;
  j["n_phi"] = w.n_phi;
  j["max_step_phase"] = w.max_step_phase;
  j["refined"] = w.refined;
  j["accumulated_phase"] = w.accumulated_phase;
  return j;
}

inline Json run_winding(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const LatticeSpec lat = cfg.lattice.build();
  if (!lat.bc_y().wraps()) throw ConfigError("winding needs lattice.bc_y periodic or twisted");
  const auto dis = cfg.disorder_realization(lat);

  WindingOptions wo;
  wo.n_phi = static_cast<int>(opt.integer("n_phi", wo.n_phi));
  wo.max_n_phi = static_cast<int>(opt.integer("max_n_phi", wo.max_n_phi));
  wo.reverse = opt.boolean("reverse", false);

  Json out = header(cfg);
  std::vector<cplx> energies;
  Json eref;
  if (!opt.has("E_ref") || (cfg.options["E_ref"].is_string() && cfg.options["E_ref"] == "auto")) {
    const GapResult gap = reference_gap(ctx, cfg.params, lat, "reference_gap");
    if (!gap.window) throw NoGapError("automatic E_ref needs a gap: " + gap.error);
    out["gap_window"] = gap_json(gap.window);
    const cplx e = ctx.timer.time("reference_energy", [&] {
      return default_reference_energy(cfg.params, lat, *gap.window, cfg.solver, cfg.thresholds);
    });
    eref = {{"source", "auto"}, {"E", complex_pair(e)}};
    energies.push_back(e);
  } else {
    const cplx e = detail::get_complex(cfg.options["E_ref"], "options.E_ref");
    eref = {{"source", "config"}, {"E", complex_pair(e)}};
    energies.push_back(e);
  }
  for (cplx e : opt.complexes("energies")) energies.push_back(e);
  out["E_ref"] = eref;

  const auto* d = dis ? &*dis : nullptr;
  const auto results = ctx.timer.time("winding", [&] {
    return parallel_map(energies.size(), ctx.run.threads,
                        [&](std::size_t i) { return winding_number(cfg.params, lat, energies[i], wo, d); });
  });
  Json rs = Json::array();
  for (const auto& w : results) rs.push_back(winding_json(w));
  out["results"] = rs;

  if (opt.boolean("refinement_check", true)) {
    WindingOptions fine = wo;
    fine.n_phi = 2 * results.front().n_phi;
    fine.max_n_phi = std::max(fine.max_n_phi, fine.n_phi);
    const WindingResult w2 =
        ctx.timer.time("refinement_check", [&] { return winding_number(cfg.params, lat, energies.front(), fine, d); });
    Json rc = winding_json(w2);
    rc["invariant"] = w2.W == results.front().W;
    out["refinement_check"] = rc;
  } else {
    out["refinement_check"] = nullptr;
  }
  return out;
}

/// Least-squares line y = a + b x and its R^2.
struct LinearFit {
  double intercept = 0.0, slope = 0.0, r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return {};
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

inline Json run_scaling(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const auto lys = opt.integers("Ly_values", {4, 6, 8, 10});
  if (lys.empty()) throw ConfigError("options.Ly_values must not be empty");
  const int lx = cfg.lattice.Lx;

  struct Point {
    Json j;
    double nc;
  };
  const auto points = parallel_map(lys.size(), ctx.run.threads, [&](std::size_t i) {
    const int ly = static_cast<int>(lys[i]);
    const LatticeSpec lat = build_lattice(lx, ly, Boundary::open(), Boundary::open());
    const std::string tag = "Ly=" + std::to_string(ly);
    const GapResult gap = reference_gap(ctx, cfg.params, lat, "reference_gap " + tag);
    const SolvedProblem run = solve_stage(ctx, "solve " + tag, cfg.params, lat, std::nullopt);
    const auto rec = classify(run.solution, run.basis, lat, gap.window ? &*gap.window : nullptr, cfg.thresholds);
    const auto nc = count_class(rec, StateClass::in_gap_corner);
    Json p;
    p["Ly"] = ly;
    p["sites"] = lat.site_count();
    p["dimension"] = static_cast<long long>(run.basis.size());
    p["gap_window"] = gap_json(gap.window);
    p["gap_error"] = gap.error.empty() ? Json(nullptr) : Json(gap.error);
    p["in_gap_corner"] = static_cast<long long>(nc);
    p["in_gap_edge"] = static_cast<long long>(count_class(rec, StateClass::in_gap_edge));
    p["corner_fraction"] = static_cast<double>(nc) / lat.site_count();
    p["max_residual"] = run.solution.max_residual();
    return Point{p, static_cast<double>(nc)};
  });

  Json out = header(cfg);
  Json pts = Json::array();
  std::vector<double> x, y;
  bool increasing = true;
  double max_fraction = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    pts.push_back(points[i].j);
    x.push_back(static_cast<double>(lys[i]));
    y.push_back(points[i].nc);
    if (i > 0 && !(points[i].nc > points[i - 1].nc)) increasing = false;
    max_fraction = std::max(max_fraction, points[i].j["corner_fraction"].get<double>());
  }
  const LinearFit fit = linear_fit(x, y);
  out["Lx"] = lx;
  out["points"] = pts;
  out["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
  out["strictly_increasing"] = increasing;
  out["max_corner_fraction"] = max_fraction;
  return out;
}

inline Json run_effective_compare(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const LatticeSpec lat = cfg.lattice.build();
  if (cfg.params.N != 2) throw ConfigError("effective_compare needs N = 2");
  const EffectiveModel model = effective_model(cfg.params, lat);

  const SolvedProblem run = solve_stage(ctx, "solve", cfg.params, lat, std::nullopt);
  std::vector<cplx> full;
  for (std::size_t j = 0; j < run.solution.size(); ++j) {
    const auto psi = run.solution.right_vectors.col(static_cast<Eigen::Index>(j));
    if (doublon_weight(psi, run.basis) >= cfg.thresholds.doublon) full.push_back(run.solution.eigenvalues(static_cast<Eigen::Index>(j)));
  }
  const SparseComplexMatrix heff = build_H_eff(cfg.params, lat);
  const EigenSolution eff = ctx.timer.time("effective_solve", [&] { return eig_dense(heff); });
  const std::vector<cplx> effv(eff.eigenvalues.begin(), eff.eigenvalues.end());
  const SpectrumComparison cmp = compare_spectra(full, effv);

  Json out = header(cfg);
  out["solver"] = solver_json(run, cfg.solver);
  out["effective"] = {{"J_eff", model.J_eff},
                      {"t_eff", model.t_eff},
                      {"U_eff_bulk", model.U_eff_bulk},
                      {"U_eff_edge", model.U_eff_edge},
                      {"perturbative", model.perturbative}};
  out["doublon_states"] = static_cast<long long>(full.size());
  out["effective_states"] = static_cast<long long>(effv.size());
  out["max_abs"] = cmp.max_abs;
  out["mean_abs"] = cmp.mean_abs;
  out["size_mismatch"] = cmp.size_mismatch();
  out["unmatched_full"] = cmp.unmatched_full;
  out["unmatched_effective"] = cmp.unmatched_eff;
  Json pairs = Json::array();
  for (const auto& p : cmp.pairs) {
    pairs.push_back({{"full", complex_pair(full[p.full])}, {"effective", complex_pair(effv[p.eff])}, {"distance", p.distance}});
  }
  out["pairs"] = pairs;

  if (opt.boolean("projector_check", true)) {
    const double diff = ctx.timer.time("projector", [&] {
      return (derive_eff_numerically(cfg.params, lat, run.basis) - heff.to_dense()).cwiseAbs().maxCoeff();
    });
    out["projector_max_diff"] = diff;
  } else {
    out["projector_max_diff"] = nullptr;
  }
  return out;
}

inline Json run_edge_analytic(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const int L = static_cast<int>(opt.integer("L", 41));
  if (L < 3 || L % 2 == 0) throw ConfigError("options.L must be an odd chain length >= 3");
  const auto Ps = opt.numbers("P_values", {cfg.params.P});
  const auto Us = opt.numbers("U_values", {cfg.params.U});

  Json cases = Json::array();
  ctx.timer.time("chains", [&] {
    for (double U : Us) {
      for (double P : Ps) {
        ModelParams p = cfg.params;
        p.U = U;
        p.P = P;
        const EdgeSolution e = analytic_edge(p);
        const Eigen::MatrixXd h = build_H_1D(p, L);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ed(h);
        const Eigen::VectorXd& vals = ed.eigenvalues();

        auto branch = [&](const EdgeBranch& b) {
          Json j;
          j["exists"] = b.exists;
          j["eps"] = b.eps;
          j["zeta2"] = b.zeta2;
          j["zeta2_abs"] = b.zeta2_abs;
          if (!b.exists) return j;
          Eigen::Index best = 0;
          (vals.array() - b.eps).abs().minCoeff(&best);
          const double fitted = fit_cell_decay(ed.eigenvectors().col(best));
          const Eigen::VectorXd v = edge_trial_vector(b, L);
          j["ed_eigenvalue"] = vals(best);
          j["abs_error"] = std::abs(vals(best) - b.eps);
          j["fitted_zeta2_abs"] = fitted;
          j["decay_rel_error"] = std::abs(fitted - b.zeta2_abs) / b.zeta2_abs;
          j["bulk_residual"] = bulk_recursion_residual(h, v, b.eps);
          j["boundary_residual"] = right_boundary_residual(h, v, b.eps);
          return j;
        };

        // ED eigenvectors with >= 90% weight in one half of the chain
        int right = 0, left = 0;
        const int half = L / 2;
        for (Eigen::Index k = 0; k < vals.size(); ++k) {
          const auto v = ed.eigenvectors().col(k);
          if (v.tail(half).squaredNorm() >= 0.9) ++right;
          if (v.head(half).squaredNorm() >= 0.9) ++left;
        }
        const bool minus_expected = P < 0 && P > -2 * e.J0;
        Json c;
        c["U"] = U;
        c["P"] = P;
        c["J0"] = e.J0;
        c["S"] = e.S;
        c["R"] = e.R;
        c["plus"] = branch(e.plus);
        c["minus"] = branch(e.minus);
        c["minus_expected"] = minus_expected;
        c["branches_existing"] = int(e.plus.exists) + int(e.minus.exists);
        c["ed_right_localized"] = right;
        c["ed_left_localized"] = left;
        cases.push_back(c);
      }
    }
  });
  Json out = header(cfg);
  out["L"] = L;
  out["cases"] = cases;
  return out;
}

struct CornerSummary {
  long long corners = 0;
  long long edges = 0;
  double min_corner_weight = INFINITY;
  double min_top_right = INFINITY;
  std::string method;
};

inline CornerSummary corner_summary(const SolvedProblem& run, const LatticeSpec& lat, const GapWindow* gap,
                                    const Thresholds& th) {
  CornerSummary s;
  s.method = method_name(run.solution.method);
  const auto rec = classify(run.solution, run.basis, lat, gap, th);
  for (std::size_t j = 0; j < rec.size(); ++j) {
    if (rec[j].cls == StateClass::in_gap_edge) ++s.edges;
    if (rec[j].cls != StateClass::in_gap_corner) continue;
    ++s.corners;
    s.min_corner_weight = std::min(s.min_corner_weight, rec[j].corner_weight);
    const auto psi = run.solution.right_vectors.col(static_cast<Eigen::Index>(j));
    s.min_top_right = std::min(s.min_top_right, top_right_fraction(density_m(psi, run.basis, lat), 3));
  }
  return s;
}

inline Json corner_json(const CornerSummary& s) {
  Json j;
  j["in_gap_corner"] = s.corners;
  j["in_gap_edge"] = s.edges;
  j["min_corner_weight"] = s.corners ? Json(s.min_corner_weight) : Json(nullptr);
  j["min_top_right_m_fraction"] = s.corners ? Json(s.min_top_right) : Json(nullptr);
  j["localized"] = s.corners > 0 && s.min_top_right >= 0.5;
  j["solver_method"] = s.method;
  return j;
}

inline Json run_disorder_ensemble(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  if (!cfg.disorder) throw ConfigError("disorder_ensemble needs a disorder block");
  const LatticeSpec lat = cfg.lattice.build();

  std::vector<std::uint64_t> seeds;
  if (opt.has("seeds")) {
    for (const auto& s : cfg.options["seeds"]) seeds.push_back(detail::get_seed(s, "options.seeds"));
  } else {
    const long long n = opt.integer("n_seeds", 10);
    if (n < 0) throw ConfigError("options.n_seeds must be non-negative");
    for (long long i = 0; i < n; ++i) seeds.push_back(cfg.disorder->seed + static_cast<std::uint64_t>(i));
  }

  const GapResult gap = reference_gap(ctx, cfg.params, lat, "reference_gap");
  if (!gap.window) throw NoGapError("disorder ensemble needs the clean gap: " + gap.error);
  const SolvedProblem clean = solve_stage(ctx, "solve clean", cfg.params, lat, std::nullopt);
  const CornerSummary c0 = corner_summary(clean, lat, &*gap.window, cfg.thresholds);

  const auto per_seed = parallel_map(seeds.size(), ctx.run.threads, [&](std::size_t i) {
    const DisorderRealization d = cfg.disorder->sample(lat, seeds[i]);
    const SolvedProblem run = solve_stage(ctx, "solve seed=" + std::to_string(seeds[i]), cfg.params, lat, d);
    return corner_summary(run, lat, &*gap.window, cfg.thresholds);
  });

  Json out = header(cfg);
  out["gap_window"] = gap_json(gap.window);
  out["clean"] = corner_json(c0);
  Json rows = Json::array();
  std::vector<long long> counts;
  bool all_equal = true, all_localized = true;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    Json r = corner_json(per_seed[i]);
    r["seed"] = seeds[i];
    r["equals_clean"] = per_seed[i].corners == c0.corners;
    all_equal = all_equal && per_seed[i].corners == c0.corners;
    all_localized = all_localized && r["localized"].get<bool>();
    counts.push_back(per_seed[i].corners);
    rows.push_back(r);
  }
  out["seeds"] = rows;
  Json summary;
  if (counts.empty()) {
    summary = {{"min", nullptr}, {"median", nullptr}, {"max", nullptr}};
  } else {
    std::vector<long long> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? double(sorted[n / 2]) : 0.5 * double(sorted[n / 2 - 1] + sorted[n / 2]);
    summary = {{"min", sorted.front()}, {"median", median}, {"max", sorted.back()}};
  }
  summary["all_equal_clean"] = all_equal;
  summary["all_localized"] = all_localized;
  out["summary"] = summary;
  return out;
}

inline Json run_potential_sweep(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const LatticeSpec lat = cfg.lattice.build();
  if (cfg.params.U == 0.0) throw ConfigError("potential_sweep needs U != 0");
  const double j0 = cfg.params.J * cfg.params.J / cfg.params.U;
  const auto Vs = opt.numbers("V_values", {0.0, j0, 2 * j0});

  const GapResult gap = reference_gap(ctx, cfg.params, lat, "reference_gap");
  if (!gap.window) throw NoGapError("potential sweep needs the clean gap: " + gap.error);
  const GapWindow g = *gap.window;

  const auto rows = parallel_map(Vs.size(), ctx.run.threads, [&](std::size_t i) {
    ModelParams p = cfg.params;
    p.V = Vs[i];
    const SolvedProblem run = solve_stage(ctx, "solve V=" + format_g12(Vs[i]), p, lat, std::nullopt);
    const CornerSummary s = corner_summary(run, lat, &g, cfg.thresholds);
    // localized doublons (corner weight >= theta_w) sitting in a band window
    const auto rec = classify(run.solution, run.basis, lat, &g, cfg.thresholds);
    long long in_band = 0;
    Json localized = Json::array();
    for (const auto& r : rec) {
      if (r.doublon_weight < cfg.thresholds.doublon || r.corner_weight < cfg.thresholds.corner) continue;
      localized.push_back(complex_pair(r.E));
      if (!(r.E.real() > g.band_lower_top && r.E.real() < g.band_upper_bottom)) ++in_band;
    }
    Json j = corner_json(s);
    j["V"] = Vs[i];
    j["localized_energies"] = localized;
    j["localized_in_band"] = in_band;
    return j;
  });

  Json out = header(cfg);
  out["gap_window"] = gap_json(gap.window);
  Json pts = Json::array();
  bool constant = true, never_in_band = true;
  for (const auto& r : rows) {
    pts.push_back(r);
    constant = constant && r["in_gap_corner"] == rows.front()["in_gap_corner"];
    never_in_band = never_in_band && r["localized_in_band"].get<long long>() == 0;
  }
  out["points"] = pts;
  out["corner_count_constant"] = constant;
  out["never_in_band"] = never_in_band;
  return out;
}

inline Json run_three_body(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const LatticeSpec lat = cfg.lattice.build();
  if (cfg.params.N < 3) throw ConfigError("three_body needs params.N >= 3");
  const double band_gap = opt.number("band_gap", 0.25 * std::max(std::abs(cfg.params.J), 1e-300));
  if (!(band_gap > 0.0)) throw ConfigError("options.band_gap must be positive");
  const int patch = static_cast<int>(opt.integer("patch", 3));
  const double fraction = opt.number("fraction", 0.5);

  const SolvedProblem run = solve_stage(ctx, "solve", cfg.params, lat, cfg.disorder_realization(lat));
  const auto& ev = run.solution.eigenvalues;  // sorted by Re E
  const std::size_t n = run.solution.size();

  std::vector<double> tr(n);
  ctx.timer.time("observables", [&] {
    for (std::size_t j = 0; j < n; ++j) {
      tr[j] = top_right_fraction(density_n(run.solution.right_vectors.col(static_cast<Eigen::Index>(j)), run.basis, lat),
                                 patch);
    }
  });

  // bands: maximal runs in Re E with consecutive spacing below band_gap
  std::vector<std::pair<std::size_t, std::size_t>> bands;
  std::size_t start = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    if (j == n || ev(static_cast<Eigen::Index>(j)).real() - ev(static_cast<Eigen::Index>(j - 1)).real() >= band_gap) {
      bands.emplace_back(start, j);
      start = j;
    }
  }

  Json out = header(cfg);
  out["solver"] = solver_json(run, cfg.solver);
  out["band_gap"] = band_gap;
  Json bj = Json::array();
  long long corner_bands = 0;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto [lo, hi] = bands[b];
    double mn = INFINITY, mx = -INFINITY;
    for (std::size_t j = lo; j < hi; ++j) {
      mn = std::min(mn, tr[j]);
      mx = std::max(mx, tr[j]);
    }
    const bool corner = mn >= fraction && bands.size() > 1;
    Json j;
    j["states"] = Json::array({static_cast<long long>(lo), static_cast<long long>(hi)});
    j["count"] = static_cast<long long>(hi - lo);
    j["re"] = Json::array({ev(static_cast<Eigen::Index>(lo)).real(), ev(static_cast<Eigen::Index>(hi - 1)).real()});
    j["gap_below"] = b > 0 ? Json(ev(static_cast<Eigen::Index>(lo)).real() - ev(static_cast<Eigen::Index>(lo - 1)).real())
                           : Json(nullptr);
    j["gap_above"] = b + 1 < bands.size()
                         ? Json(ev(static_cast<Eigen::Index>(hi)).real() - ev(static_cast<Eigen::Index>(hi - 1)).real())
                         : Json(nullptr);
    j["min_top_right_n_fraction"] = mn;
    j["max_top_right_n_fraction"] = mx;
    j["corner_band"] = corner;
    if (corner) {
      ++corner_bands;
      for (std::size_t s = lo; s < hi; ++s) {
        const auto psi = run.solution.right_vectors.col(static_cast<Eigen::Index>(s));
        ctx.add_file("grids/state_" + index_tag(s) + "_n.csv", grid_csv(density_n(psi, run.basis, lat)));
      }
    }
    bj.push_back(j);
  }
  out["bands"] = bj;
  out["corner_bands"] = corner_bands;
  Json spectrum = Json::array();
  for (std::size_t j = 0; j < n; ++j) spectrum.push_back(complex_pair(ev(static_cast<Eigen::Index>(j))));
  out["spectrum"] = spectrum;
  return out;
}

inline Json run_null_tests(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Options opt{cfg.options};
  const LatticeSpec lat = cfg.lattice.build();
  std::vector<std::string> cases;
  if (opt.has("cases")) {
    for (const auto& c : cfg.options["cases"]) {
      if (!c.is_string() || (c != "U0" && c != "P0")) throw ConfigError("options.cases entries must be U0 or P0");
      cases.push_back(c.get<std::string>());
    }
  } else {
    cases = {"U0", "P0"};
  }

  Json out = header(cfg);
  Json rows = Json::array();
  for (const auto& name : cases) {
    ModelParams p = cfg.params;
    (name == "U0" ? p.U : p.P) = 0.0;
    const GapResult gap = reference_gap(ctx, p, lat, "reference_gap " + name);
    const SolvedProblem run = solve_stage(ctx, "solve " + name, p, lat, std::nullopt);
    const auto rec = classify(run.solution, run.basis, lat, gap.window ? &*gap.window : nullptr, cfg.thresholds);
    double wmax = 0.0, wmax_d = 0.0;
    for (const auto& r : rec) {
      wmax = std::max(wmax, r.corner_weight);
      if (r.doublon_weight >= cfg.thresholds.doublon) wmax_d = std::max(wmax_d, r.corner_weight);
    }
    Json r;
    r["case"] = name;
    r["U"] = p.U;
    r["P"] = p.P;
    r["solver"] = solver_json(run, cfg.solver);
    r["gap_window"] = gap_json(gap.window);
    r["gap_error"] = gap.error.empty() ? Json(nullptr) : Json(gap.error);
    r["counts"] = counts_json(rec);
    r["max_corner_weight"] = wmax;
    r["max_corner_weight_doublon"] = wmax_d;
    rows.push_back(r);
  }
  out["cases"] = rows;
  return out;
}

}  // namespace detail

inline RunOutput run(const ExperimentConfig& config, const RunOptions& opts = {}) {
  ExperimentConfig cfg = config;
  if (opts.seed && cfg.disorder) cfg.disorder->seed = *opts.seed;
  detail::Context ctx{cfg, opts, {}, {}, {}};

  Json bundle;
  switch (cfg.experiment) {
    case Experiment::spectrum:
    case Experiment::densities: bundle = detail::run_spectrum(ctx); break;
    case Experiment::winding: bundle = detail::run_winding(ctx); break;
    case Experiment::scaling: bundle = detail::run_scaling(ctx); break;
    case Experiment::effective_compare: bundle = detail::run_effective_compare(ctx); break;
    case Experiment::edge_analytic: bundle = detail::run_edge_analytic(ctx); break;
    case Experiment::disorder_ensemble: bundle = detail::run_disorder_ensemble(ctx); break;
    case Experiment::potential_sweep: bundle = detail::run_potential_sweep(ctx); break;
    case Experiment::three_body: bundle = detail::run_three_body(ctx); break;
    case Experiment::null_tests: bundle = detail::run_null_tests(ctx); break;
  }

  if (opts.dump_matrix) {
    const LatticeSpec lat = cfg.lattice.build();
    const FockBasis basis = enumerate_basis(lat.site_count(), cfg.params.N);
    std::ostringstream os;
    write_coordinate(assemble(cfg.params, lat, basis, cfg.disorder_realization(lat)), os);
    ctx.add_file("hamiltonian.coo", os.str());
  }

  RunOutput out;
  out.bundle = std::move(bundle);
  out.timings = ctx.timer.json();
  out.files = std::move(ctx.files);
  std::sort(out.files.begin(), out.files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  os << text;
}

/// result.json, timings.json and the side files under `dir`.
inline void write_outputs(const std::filesystem::path& dir, const RunOutput& out) {
  std::filesystem::create_directories(dir);
  write_text(dir / "result.json", to_json_text(out.bundle));
  write_text(dir / "timings.json", to_json_text(out.timings));
  for (const auto& f : out.files) write_text(dir / f.path, f.contents);
}

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"J", "t", "P", "U", "V"};
  return axes;
}

inline double& coupling(ModelParams& p, const std::string& axis) {
  if (axis == "J") return p.J;
  if (axis == "t") return p.t;
  if (axis == "P") return p.P;
  if (axis == "U") return p.U;
  if (axis == "V") return p.V;
  throw ConfigError("sweep axis must be one of J, t, P, U, V; got '" + axis + "'");
}

struct SweepOutput {
  Json index;
  std::vector<RunOutput> points;
};

/// One run per value, in input order. Points run one after another; the
/// thread budget goes to each run.
inline SweepOutput sweep(const ExperimentConfig& config, const std::string& axis, const std::vector<double>& values,
                         const RunOptions& opts = {}) {
  ModelParams probe = config.params;
  coupling(probe, axis);  // validates the axis name

  SweepOutput out;
  out.index["schema_version"] = kSchemaVersion;
  out.index["axis"] = axis;
  out.index["values"] = values;
  out.index["config"] = config_echo(config);
  Json points = Json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig c = config;
    coupling(c.params, axis) = values[i];
    c.params.validate();
    out.points.push_back(run(c, opts));
    points.push_back({{"index", static_cast<long long>(i)},
                      {"value", values[i]},
                      {"dir", "point_" + detail::index_tag(i)}});
  }
  out.index["points"] = points;
  return out;
}

inline void write_sweep(const std::filesystem::path& dir, const SweepOutput& s) {
  std::filesystem::create_directories(dir);
  write_text(dir / "sweep.json", to_json_text(s.index));
  for (std::size_t i = 0; i < s.points.size(); ++i) write_outputs(dir / ("point_" + detail::index_tag(i)), s.points[i]);
}

/// Exit code of an error: 2 config, 3 solver, 4 capacity, 1 anything else.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const CapacityError*>(&e)) return 4;
  if (dynamic_cast<const SolverError*>(&e)) return 3;
  return 1;
}

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  if (dynamic_cast<const CapacityError*>(&e)) return "capacity_error";
  if (dynamic_cast<const NoGapError*>(&e)) return "no_gap_error";
  if (dynamic_cast<const SolverError*>(&e)) return "solver_error";
  return "internal_error";
}

inline Json error_json(const std::exception& e) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["error"] = {{"kind", error_kind(e)}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
  return j;
}

}  // namespace doublon
