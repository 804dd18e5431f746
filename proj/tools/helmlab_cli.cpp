// Batch experiment runner. Subcommands: sweep, probe, radial, calibrate,
// plots. Every experiment reads a JSON config, writes CSV results and a
// manifest into --out, and is deterministic for a fixed config and seed.
// Exit codes: 0 success, 2 validation error, 3 budget truncation,
// 4 solver failure in all rows.

#include <CLI11.hpp>

#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helmlab/lab.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string levels;
  int64_t seed = -1;
  int64_t max_cells = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--levels", args.levels, "override grid levels, comma-separated h values");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--max-cells", args.max_cells, "override the grid cell budget");
}

helmlab::lab::ExperimentConfig load_with_overrides(const CommonArgs& args) {
  auto cfg = helmlab::lab::load_config(args.config_path);
  if (!args.levels.empty()) {
    std::vector<double> levels;
    std::stringstream ss(args.levels);
    std::string tok;
    while (std::getline(ss, tok, ',')) levels.push_back(std::stod(tok));
    cfg.grid_levels = levels;
    cfg.raw["grid_levels"] = levels;
  }
  if (args.seed >= 0) {
    cfg.seed = static_cast<uint64_t>(args.seed);
    cfg.raw["seed"] = cfg.seed;
  }
  if (args.max_cells > 0) {
    cfg.max_cells = static_cast<size_t>(args.max_cells);
  }
  return cfg;
}

int run_kind(const CommonArgs& args, const std::set<std::string>& allowed) {
  try {
    const auto cfg = load_with_overrides(args);
    if (!allowed.count(helmlab::lab::kind_name(cfg.kind))) {
      std::fprintf(stderr, "error: config kind '%s' does not match this subcommand\n",
                   helmlab::lab::kind_name(cfg.kind).c_str());
      return 2;
    }
    const auto res = helmlab::lab::run_experiment(cfg, args.out_dir);
    std::printf("%s: %zu/%zu rows -> %s%s\n", helmlab::lab::kind_name(cfg.kind).c_str(), res.rows_done,
                res.rows_total, res.out_dir.c_str(), res.truncated ? " (truncated)" : "");
    return res.exit_code;
  } catch (const helmlab::lab::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical scattering experiments on penetrable media"};
  app.require_subcommand(1);

  CommonArgs sweep_args, probe_args, radial_args, calib_args;
  std::string plots_dir;

  auto* sweep = app.add_subcommand(
      "sweep", "wavenumber sweep (sweep, corner_scatter, nonradiating_source, stationary_phase configs)");
  add_common(sweep, sweep_args);
  auto* probe = app.add_subcommand("probe", "boundary jump probe (jump_probe configs)");
  add_common(probe, probe_args);
  auto* radial =
      app.add_subcommand("radial", "radial non-scattering cross-check (radial_nonscatter configs)");
  add_common(radial, radial_args);
  auto* calibrate = app.add_subcommand(
      "calibrate", "calibrate the scattering floor (corner_scatter configs, >= 3 levels)");
  add_common(calibrate, calib_args);
  auto* plots = app.add_subcommand("plots", "emit plot data and scripts for a finished run");
  plots->add_option("--out", plots_dir, "result directory holding manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  if (sweep->parsed())
    return run_kind(sweep_args, {"sweep", "corner_scatter", "nonradiating_source", "stationary_phase"});
  if (probe->parsed()) return run_kind(probe_args, {"jump_probe"});
  if (radial->parsed()) return run_kind(radial_args, {"radial_nonscatter"});
  if (calibrate->parsed()) {
    try {
      const auto cfg = load_with_overrides(calib_args);
      const auto cal = helmlab::lab::calibrate_floor(cfg, calib_args.out_dir);
      std::printf("floor=%.6g extrapolated=%.6g monotone=%s\n", cal.floor, cal.extrapolated,
                  cal.monotone ? "yes" : "no (using finest level)");
      return 0;
    } catch (const helmlab::lab::ConfigError& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  if (plots->parsed()) {
    try {
      const int n = helmlab::lab::emit_plots(plots_dir);
      std::printf("wrote %d plot files under %s/plots\n", n, plots_dir.c_str());
      return 0;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    }
  }
  return 1;
}
