#include <doctest.h>

#include <filesystem>

#include "helmlab/lab.hpp"

using namespace helmlab;
using namespace helmlab::lab;
namespace fs = std::filesystem;

namespace {

json mini_sweep_config() {
  return json::parse(R"({
    "kind": "sweep",
    "shape": {"type": "disk", "center": [0.0, 0.0], "radius": 1.0},
    "contrast": {"kind": "constant", "n": 1.5},
    "incidents": [
      {"type": "plane", "direction": [1.0, 0.0], "id": "plane"},
      {"type": "herglotz", "density": {"min_order": 0, "coefficients": [[1.0, 0.0]]}, "id": "hg0"}
    ],
    "k": {"min": 1.0, "max": 1.4, "step": 0.2},
    "grid_levels": [0.05],
    "solver": {"tol": 1e-7},
    "far_directions": 64,
    "seed": 3
  })");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config validation rejects bad inputs before any solve") {
  auto bad = mini_sweep_config();
  bad["k"]["min"] = 2.0;
  bad["k"]["max"] = 1.0;  // empty range
  CHECK_THROWS_AS(validate_config(parse_config(bad)), ConfigError);

  auto coarse = mini_sweep_config();
  coarse["grid_levels"] = {0.5};  // cannot resolve the wavelength
  CHECK_THROWS_AS(validate_config(parse_config(coarse)), ConfigError);

  auto inside = mini_sweep_config();
  inside["incidents"] = json::array({json{{"type", "point_source"}, {"location", {0.2, 0.0}}}});
  CHECK_THROWS_AS(validate_config(parse_config(inside)), ConfigError);

  auto unknown = mini_sweep_config();
  unknown["kind"] = "banana";
  CHECK_THROWS_AS(parse_config(unknown), ConfigError);
}

TEST_CASE("sweep runs are deterministic: identical config and seed give identical bytes") {
  const auto cfg = parse_config(mini_sweep_config());
  TempDir a("helmlab_det_a"), b("helmlab_det_b");
  const auto ra = run_experiment(cfg, a.str());
  const auto rb = run_experiment(cfg, b.str());
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  CHECK(ra.rows_done == 6);  // 3 wavenumbers x 2 incidents
  CHECK(io::read_file(a.str() + "/rows.csv") == io::read_file(b.str() + "/rows.csv"));
}

TEST_CASE("manifest lists every output with a valid checksum and passes the schema") {
  const auto cfg = parse_config(mini_sweep_config());
  TempDir dir("helmlab_manifest");
  run_experiment(cfg, dir.str());
  CHECK(manifest_integrity_errors(dir.str()).empty());
  auto m = json::parse(io::read_file(dir.str() + "/manifest.json"));
  CHECK(manifest_schema_errors(m).empty());
  m.erase("seed");
  CHECK_FALSE(manifest_schema_errors(m).empty());
}

TEST_CASE("budget truncation journals partial rows; a rerun completes without recomputing") {
  auto j = mini_sweep_config();
  auto cfg = parse_config(j);
  cfg.max_solves = 2;
  TempDir dir("helmlab_resume");
  const auto partial = run_experiment(cfg, dir.str());
  CHECK(partial.exit_code == 3);
  CHECK(partial.truncated);
  CHECK(partial.rows_done < 6);
  CHECK(fs::exists(dir.path / "rows.partial.csv"));

  cfg.max_solves = size_t(1) << 40;
  const auto full = run_experiment(cfg, dir.str());
  CHECK(full.exit_code == 0);
  CHECK(full.rows_done == 6);
  CHECK_FALSE(fs::exists(dir.path / "rows.partial.csv"));
  // the final table holds exactly one row per (k, incident)
  const auto rows = io::read_file(dir.str() + "/rows.csv");
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 7);  // header + 6 rows
}

TEST_CASE("plot emission: one data file per incident plus scripts; missing manifest refuses") {
  const auto cfg = parse_config(mini_sweep_config());
  TempDir dir("helmlab_plots");
  run_experiment(cfg, dir.str());
  emit_plots(dir.str());
  CHECK(fs::exists(dir.path / "plots" / "rho_vs_k_plane.csv"));
  CHECK(fs::exists(dir.path / "plots" / "rho_vs_k_hg0.csv"));
  CHECK(fs::exists(dir.path / "plots" / "plot_rho_vs_k.py"));
  CHECK(fs::exists(dir.path / "plots" / "plots_manifest.json"));
  TempDir empty("helmlab_nomanifest");
  fs::create_directories(empty.path);
  CHECK_THROWS_AS(emit_plots(empty.str()), std::runtime_error);
}

TEST_CASE("jump probe experiment writes the per-offset jump table") {
  auto j = json::parse(R"({
    "kind": "jump_probe",
    "shape": {"type": "polygon", "vertices": [[0,0],[1,0],[1,1],[0,1]]},
    "probe": {"point": [0,0], "direction": [0.70710678, 0.70710678],
              "offsets": [0.1, 0.05], "base_h": 0.02},
    "seed": 1
  })");
  TempDir dir("helmlab_probe");
  const auto res = run_experiment(parse_config(j), dir.str());
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir.path / "probe_0.csv"));
  CHECK(fs::exists(dir.path / "probe_0.json"));
  const auto rep = json::parse(io::read_file(dir.str() + "/probe_0.json"));
  CHECK(rep.at("divergence_flag") == false);
  emit_plots(dir.str());
  CHECK(fs::exists(dir.path / "plots" / "plot_jump_traces.py"));
}

TEST_CASE("radial experiment: dip rows reference spectrum roots exactly") {
  auto j = json::parse(R"({
    "kind": "radial_nonscatter",
    "shape": {"type": "disk", "center": [0,0], "radius": 1.0},
    "contrast": {"kind": "constant", "n": 4.0},
    "radial": {"orders": [{"ell": 0, "count": 1}], "offset": 0.2, "k_search": [0.3, 6.0]},
    "grid_levels": [0.02],
    "solver": {"tol": 1e-7},
    "seed": 1
  })");
  TempDir dir("helmlab_radial");
  const auto res = run_experiment(parse_config(j), dir.str());
  CHECK(res.exit_code == 0);
  const auto spec = json::parse(io::read_file(dir.str() + "/spectrum.json"));
  // the "root" row in rho_dips.csv carries a k that appears in the spectrum
  std::istringstream in(io::read_file(dir.str() + "/rho_dips.csv"));
  std::string line;
  std::getline(in, line);
  bool found = false;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string ell, ri, pos, k;
    std::getline(row, ell, ',');
    std::getline(row, ri, ',');
    std::getline(row, pos, ',');
    std::getline(row, k, ',');
    if (pos != "root") continue;
    for (const auto& r : spec.at("roots"))
      if (std::abs(r.at("k").get<double>() - std::stod(k)) < 1e-12 && r.at("ell") == std::stoi(ell))
        found = true;
  }
  CHECK(found);
  emit_plots(dir.str());
  CHECK(fs::exists(dir.path / "plots" / "plot_radial.py"));
}

TEST_CASE("calibration preconditions") {
  auto j = mini_sweep_config();
  j["kind"] = "corner_scatter";
  j["shape"] = json::parse(R"({"type":"polygon","vertices":[[0,0],[1,0],[1,1],[0,1]]})");
  auto cfg = parse_config(j);
  TempDir dir("helmlab_calib_pre");
  // single level refuses
  CHECK_THROWS_AS(calibrate_floor(cfg, dir.str()), ConfigError);

  // a disk window containing a determinant root refuses
  auto disk = mini_sweep_config();
  disk["contrast"]["n"] = 4.0;
  disk["k"] = {{"min", 3.0}, {"max", 3.6}, {"step", 0.1}};
  disk["grid_levels"] = {0.04, 0.02, 0.01};
  auto dcfg = parse_config(disk);
  CHECK_THROWS_AS(calibrate_floor(dcfg, dir.str()), ConfigError);
}

TEST_CASE("calibration produces a positive floor on a small corner sweep") {
  auto j = json::parse(R"({
    "kind": "corner_scatter",
    "shape": {"type": "polygon", "vertices": [[0,0],[1,0],[1,1],[0,1]]},
    "contrast": {"kind": "constant", "n": 2.0},
    "incidents": [{"type": "plane", "direction": [1.0, 0.0], "id": "plane"}],
    "k": {"min": 2.0, "max": 2.4, "step": 0.2},
    "grid_levels": [0.08, 0.04, 0.02],
    "solver": {"tol": 1e-7},
    "far_directions": 64,
    "seed": 1
  })");
  TempDir dir("helmlab_calib");
  const auto cal = calibrate_floor(parse_config(j), dir.str());
  CHECK(cal.floor > 0.0);
  CHECK(fs::exists(dir.path / "rho_floor.json"));
  const auto persisted = json::parse(io::read_file(dir.str() + "/rho_floor.json"));
  CHECK(persisted.at("floor").get<double>() == cal.floor);
}
