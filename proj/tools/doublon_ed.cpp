// doublon-ed: run one experiment config, or sweep it over a coupling.
//
//   doublon-ed run <config.json> [--out DIR] [--threads N] [--seed S] [--dump-matrix]
//   doublon-ed sweep <config.json> --axis V --values 0,0.125,0.25 [...]
//
// Exit codes: 0 ok, 1 internal error, 2 config error, 3 solver error, 4 capacity error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doublon/doublon.hpp"

namespace {

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw doublon::ConfigError("--values entry '" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw doublon::ConfigError("--values entry '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

int report(const std::exception& e, const std::string& out_dir) {
  const doublon::Json err = doublon::error_json(e);
  std::cerr << err.dump() << "\n";
  if (!out_dir.empty()) {
    try {
      doublon::write_text(std::filesystem::path(out_dir) / "error.json", doublon::to_json_text(err));
    } catch (const std::exception&) {
      // stderr already carries the error
    }
  }
  return doublon::exit_code_for(e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact diagonalization of the non-Hermitian extended Bose-Hubbard model"};
  app.require_subcommand(1);

  std::string config_path, out_dir, axis, values;
  int threads = 1;
  std::uint64_t seed = 0;
  bool dump = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--threads", threads, "worker threads for seeds and sweep points")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "disorder seed (overrides the config)");
    sub->add_flag("--dump-matrix", dump, "write the Hamiltonian in coordinate format");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment");
  common(run_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run an experiment for each value of a coupling");
  common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "coupling to sweep: J, t, P, U or V")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  doublon::RunOptions opts;
  opts.threads = threads;
  opts.dump_matrix = dump;
  const bool seed_given = (run_cmd->parsed() ? run_cmd : sweep_cmd)->count("--seed") > 0;
  if (seed_given) opts.seed = seed;

  std::string dir = out_dir;
  try {
    const doublon::ExperimentConfig cfg = doublon::load_config(config_path);
    if (dir.empty()) dir = cfg.output_dir;
    if (run_cmd->parsed()) {
      doublon::write_outputs(dir, doublon::run(cfg, opts));
    } else {
      doublon::write_sweep(dir, doublon::sweep(cfg, axis, parse_values(values), opts));
    }
  } catch (const std::exception& e) {
    return report(e, dir);
  }
  return 0;
}
