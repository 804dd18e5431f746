#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "helmlab/io.hpp"
#include "helmlab/lippmann.hpp"
#include "helmlab/radial.hpp"
#include "helmlab/version.hpp"
#include "helmlab/volume_potential.hpp"

// Experiment orchestration: wavenumber sweeps, boundary jump-probe campaigns,
// radial non-scattering cross-checks, source studies and stationary-phase
// ladders, all batch runs writing CSV results plus a JSON manifest listing
// every output file with a checksum. Runs are deterministic for a fixed
// config and seed; sweep rows journal to a partial file so an interrupted run
// resumes without recomputing finished rows.

namespace helmlab::lab {

namespace fs = std::filesystem;
using geometry::Contrast;
using geometry::MediumField;
using geometry::Shape;
using nlohmann::json;

enum class ExperimentKind { Sweep, JumpProbe, RadialNonscatter, CornerScatter, NonradiatingSource, StationaryPhase };

inline std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::JumpProbe: return "jump_probe";
    case ExperimentKind::RadialNonscatter: return "radial_nonscatter";
    case ExperimentKind::CornerScatter: return "corner_scatter";
    case ExperimentKind::NonradiatingSource: return "nonradiating_source";
    case ExperimentKind::StationaryPhase: return "stationary_phase";
  }
  return "?";
}

inline ExperimentKind kind_from_name(const std::string& s) {
  if (s == "sweep") return ExperimentKind::Sweep;
  if (s == "jump_probe") return ExperimentKind::JumpProbe;
  if (s == "radial_nonscatter") return ExperimentKind::RadialNonscatter;
  if (s == "corner_scatter") return ExperimentKind::CornerScatter;
  if (s == "nonradiating_source") return ExperimentKind::NonradiatingSource;
  if (s == "stationary_phase") return ExperimentKind::StationaryPhase;
  throw std::invalid_argument("unknown experiment kind: " + s);
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incident-wave family member without the wavenumber; k is injected per row.
struct IncidentSpec {
  json spec;  // as in waves::incident_from_json, minus "k"
  std::string id;

  waves::IncidentWave make(double k) const {
    json j = spec;
    j["k"] = k;
    return waves::incident_from_json(j);
  }
};

struct RadialStudy {
  std::vector<std::pair<int, int>> orders;  // (ell, root count)
  double offset{0.2};
  double k_search_min{0.3};
  double k_search_max{12.0};
};

struct ProbeStudy {
  Point point;
  Point direction;
  std::vector<double> offsets;
  cplx density_constant{1.0, 0.0};
  double base_h{0.02};
};

struct SourceStudy {
  double k{3.0};
};

struct StationaryStudy {
  std::vector<double> k_ladder{10.0, 20.0, 40.0, 80.0};
  int densities{5};
  std::vector<double> radii{1.0, 1.05, 1.12, 1.19, 1.27};
  double c1_bound{10.0};
  double min_abs{0.5};
};

struct ExperimentConfig {
  ExperimentKind kind{ExperimentKind::Sweep};
  Shape shape = Shape::disk({0, 0, 0}, 1.0);
  Contrast contrast = Contrast::constant(2.0);
  std::vector<IncidentSpec> incidents;
  double k_min{1.0}, k_max{2.0}, k_step{0.1};
  std::vector<double> grid_levels{0.02};
  double margin{0.2};
  lippmann::SolverOptions solver;
  int far_directions{128};
  uint64_t seed{1};
  size_t max_cells{1ull << 24};
  size_t max_solves{1ull << 40};
  RadialStudy radial;
  ProbeStudy probe;
  SourceStudy source;
  StationaryStudy stationary;
  json raw;  // config as parsed, echoed into the manifest
};

// ---------------------------------------------------------------------------
// Parsing and validation.

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.raw = j;
  std::vector<std::string> errors;
  try {
    c.kind = kind_from_name(j.at("kind").get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  auto get = [&](const char* key) -> const json& { return j.at(key); };
  try {
    if (j.contains("shape")) c.shape = geometry::shape_from_json(get("shape"));
    if (j.contains("contrast")) c.contrast = geometry::contrast_from_json(get("contrast"));
    if (j.contains("incidents")) {
      int idx = 0;
      for (const auto& inc : get("incidents")) {
        IncidentSpec spec;
        spec.spec = inc;
        spec.id = inc.value("id", inc.at("type").get<std::string>() + "_" + std::to_string(idx));
        c.incidents.push_back(spec);
        ++idx;
      }
    }
    if (j.contains("k")) {
      c.k_min = get("k").at("min");
      c.k_max = get("k").at("max");
      c.k_step = get("k").value("step", 0.1);
    }
    if (j.contains("grid_levels")) c.grid_levels = get("grid_levels").get<std::vector<double>>();
    c.margin = j.value("margin", 0.2);
    if (j.contains("solver")) {
      c.solver.tol = get("solver").value("tol", 1e-8);
      c.solver.restart = get("solver").value("restart", 80);
      c.solver.max_iterations = get("solver").value("max_iterations", 4000);
    }
    c.far_directions = j.value("far_directions", 128);
    c.seed = j.value("seed", 1ull);
    if (j.contains("budget")) {
      c.max_cells = get("budget").value("max_cells", c.max_cells);
      c.max_solves = get("budget").value("max_solves", c.max_solves);
    }
    if (j.contains("radial")) {
      c.radial.orders.clear();
      for (const auto& o : get("radial").at("orders"))
        c.radial.orders.push_back({o.at("ell").get<int>(), o.at("count").get<int>()});
      c.radial.offset = get("radial").value("offset", 0.2);
      if (get("radial").contains("k_search")) {
        c.radial.k_search_min = get("radial").at("k_search").at(0);
        c.radial.k_search_max = get("radial").at("k_search").at(1);
      }
    }
    if (j.contains("probe")) {
      const auto& p = get("probe");
      c.probe.point = {p.at("point").at(0), p.at("point").at(1), 0.0};
      c.probe.direction = {p.at("direction").at(0), p.at("direction").at(1), 0.0};
      c.probe.offsets = p.at("offsets").get<std::vector<double>>();
      if (p.contains("density_constant"))
        c.probe.density_constant = {p.at("density_constant").at(0), p.at("density_constant").at(1)};
      c.probe.base_h = p.value("base_h", 0.02);
    }
    if (j.contains("source")) c.source.k = get("source").value("k", 3.0);
    if (j.contains("stationary")) {
      const auto& s = get("stationary");
      if (s.contains("k_ladder")) c.stationary.k_ladder = s.at("k_ladder").get<std::vector<double>>();
      c.stationary.densities = s.value("densities", 5);
      if (s.contains("radii")) c.stationary.radii = s.at("radii").get<std::vector<double>>();
      c.stationary.c1_bound = s.value("c1_bound", 10.0);
      c.stationary.min_abs = s.value("min_abs", 0.5);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

namespace detail {

inline bool needs_sweep(ExperimentKind k) {
  return k == ExperimentKind::Sweep || k == ExperimentKind::CornerScatter;
}

inline double max_index(const ExperimentConfig& c) {
  if (c.contrast.kind == geometry::ContrastKind::Constant) return std::max(1.0, c.contrast.value);
  double m = 1.0;
  const Point ctr = geometry::shape_center(c.shape);
  for (int i = 0; i <= 64; ++i) {
    const double r = geometry::diameter(c.shape) * 0.5 * i / 64.0;
    m = std::max(m, c.contrast.eval({ctr.x + r, ctr.y, ctr.z}, ctr));
  }
  return m;
}

}  // namespace detail

/// Full validation; throws ConfigError listing every problem found.
inline void validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (detail::needs_sweep(c.kind)) {
    if (!(c.k_min > 0.0) || !(c.k_max > c.k_min)) errors.push_back("k range must be positive and increasing");
    if (!(c.k_step > 0.0)) errors.push_back("k step must be positive");
    if (c.incidents.empty()) errors.push_back("sweep requires at least one incident wave");
    if (c.grid_levels.empty()) errors.push_back("sweep requires at least one grid level");
    // wavelength resolution must hold for every level at k_max
    const double n_max = detail::max_index(c);
    const double h_max = 2.0 * M_PI / (c.k_max * std::sqrt(n_max)) / c.solver.min_cells_per_wavelength;
    for (double h : c.grid_levels)
      if (h > h_max)
        errors.push_back("grid level h=" + io::fmt(h) + " does not resolve k_max (need h <= " +
                         io::fmt(h_max) + ")");
    for (const auto& inc : c.incidents) {
      if (inc.spec.value("type", "") == "point_source") {
        const auto p = inc.spec.at("location");
        const Point z0{p.at(0), p.at(1), 0.0};
        if (geometry::contains(c.shape, z0) ||
            geometry::boundary_distance(c.shape, z0) < 1e-9 * geometry::diameter(c.shape))
          errors.push_back("point source location must lie outside the scatterer");
      }
    }
  }
  if (c.kind == ExperimentKind::JumpProbe) {
    if (c.probe.offsets.empty()) errors.push_back("probe requires a nonempty offset list");
    for (size_t i = 1; i < c.probe.offsets.size(); ++i)
      if (!(c.probe.offsets[i] < c.probe.offsets[i - 1]))
        errors.push_back("probe offsets must be strictly decreasing");
  }
  if (c.kind == ExperimentKind::RadialNonscatter) {
    if (c.shape.kind != geometry::ShapeKind::Disk) errors.push_back("radial study requires a disk");
    if (c.contrast.kind != geometry::ContrastKind::Constant)
      errors.push_back("radial study requires constant contrast");
    if (c.radial.orders.empty()) errors.push_back("radial study requires at least one angular order");
    if (c.grid_levels.empty()) errors.push_back("radial study requires a grid level");
  }
  if (c.kind == ExperimentKind::NonradiatingSource) {
    if (!(c.source.k > 0.0)) errors.push_back("source study requires k > 0");
    if (c.grid_levels.size() < 2) errors.push_back("source study requires at least 2 grid levels");
  }
  if (c.kind == ExperimentKind::StationaryPhase) {
    if (c.stationary.k_ladder.size() < 2) errors.push_back("stationary study requires a k ladder");
    for (size_t i = 1; i < c.stationary.k_ladder.size(); ++i)
      if (!(c.stationary.k_ladder[i] > c.stationary.k_ladder[i - 1]))
        errors.push_back("stationary k ladder must increase");
  }
  for (double h : c.grid_levels) {
    if (!(h > 0.0)) {
      errors.push_back("grid levels must be positive");
      break;
    }
  }
  if (!errors.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

// ---------------------------------------------------------------------------
// Run artifacts.

struct RunResult {
  int exit_code{0};
  std::string out_dir;
  size_t rows_total{0};
  size_t rows_done{0};
  bool truncated{false};
};

namespace detail {

inline int worker_count() {
  if (const char* env = std::getenv("HELMLAB_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1 && n <= 64) return n;
  }
  return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
}

struct ManifestWriter {
  json manifest;
  std::string dir;

  ManifestWriter(const ExperimentConfig& c, const std::string& out_dir) : dir(out_dir) {
    manifest["version"] = std::string(kVersion);
    manifest["kind"] = kind_name(c.kind);
    manifest["seed"] = c.seed;
    manifest["config"] = c.raw;
    manifest["config_fnv1a64"] = io::checksum_hex(c.raw.dump());
    manifest["generated_files"] = json::array();
    manifest["truncated"] = false;
  }
  void add_file(const std::string& name, const std::string& content) {
    io::write_file(dir + "/" + name, content);
    manifest["generated_files"].push_back(
        {{"path", name}, {"bytes", content.size()}, {"fnv1a64", io::checksum_hex(content)}});
  }
  void finish(double wall_seconds, size_t rows, bool truncated) {
    manifest["timings"] = {{"wall_seconds", wall_seconds}};
    manifest["row_count"] = rows;
    manifest["truncated"] = truncated;
    io::write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
  }
};

// journal of finished rows; survives interruption, removed on completion
struct RowJournal {
  std::string path;
  std::map<std::string, std::string> done;
  std::mutex mu;

  explicit RowJournal(const std::string& p) : path(p) {
    if (fs::exists(path)) {
      std::istringstream in(io::read_file(path));
      std::string line;
      while (std::getline(in, line)) {
        const auto sep = line.find(';');
        if (sep != std::string::npos) done[line.substr(0, sep)] = line.substr(sep + 1);
      }
    }
  }
  bool has(const std::string& key) {
    std::lock_guard<std::mutex> lock(mu);
    return done.count(key) > 0;
  }
  void record(const std::string& key, const std::string& row) {
    std::lock_guard<std::mutex> lock(mu);
    done[key] = row;
    std::ofstream out(path, std::ios::app);
    out << key << ';' << row << '\n';
  }
  void remove() { fs::remove(path); }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweep-family experiments (sweep, corner_scatter).

namespace detail {

struct SweepRowKey {
  int level;
  int k_index;
  int incident;
  std::string str() const {
    return "L" + std::to_string(level) + "|K" + std::to_string(k_index) + "|I" + std::to_string(incident);
  }
};

inline std::vector<double> k_values(const ExperimentConfig& c) {
  std::vector<double> ks;
  const int count = static_cast<int>(std::floor((c.k_max - c.k_min) / c.k_step + 1.5));
  for (int i = 0; i < count; ++i) {
    const double k = c.k_min + i * c.k_step;
    if (k > c.k_max + 1e-12) break;
    ks.push_back(k);
  }
  return ks;
}

inline RunResult run_sweep(const ExperimentConfig& c, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  ManifestWriter manifest(c, out_dir);
  RowJournal journal(out_dir + "/rows.partial.csv");

  const auto ks = k_values(c);
  struct Group {
    int level;
    int k_index;
  };
  std::vector<Group> groups;
  for (int l = 0; l < static_cast<int>(c.grid_levels.size()); ++l)
    for (int ki = 0; ki < static_cast<int>(ks.size()); ++ki) groups.push_back({l, ki});
  const size_t rows_total = groups.size() * c.incidents.size();

  // rasterize each level once
  std::vector<MediumField> media;
  for (double h : c.grid_levels)
    media.push_back(geometry::rasterize(c.shape, c.contrast, geometry::make_grid(c.shape, h, c.margin, c.max_cells)));

  std::atomic<size_t> next{0}, solves{0}, failures{0}, done_rows{0};
  std::atomic<bool> out_of_budget{false};
  std::mutex rows_mu;
  std::map<std::string, std::string> rows;  // key -> csv row
  {
    std::lock_guard<std::mutex> lock(journal.mu);
    for (const auto& [key, row] : journal.done) rows[key] = row;
  }

  auto worker = [&]() {
    for (;;) {
      const size_t g = next.fetch_add(1);
      if (g >= groups.size() || out_of_budget.load()) return;
      const auto[level, k_index] = groups[g];
      const double k = ks[k_index];
      const MediumField& m = media[level];

      // skip fully journaled groups without building the kernel table
      bool all_done = true;
      for (int inc = 0; inc < static_cast<int>(c.incidents.size()); ++inc)
        if (!journal.has(SweepRowKey{level, k_index, inc}.str())) all_done = false;
      if (all_done) {
        done_rows += c.incidents.size();
        continue;
      }

      std::optional<fftconv::KernelConvolver> conv;
      for (int inc = 0; inc < static_cast<int>(c.incidents.size()); ++inc) {
        const SweepRowKey key{level, k_index, inc};
        if (journal.has(key.str())) {
          ++done_rows;
          continue;
        }
        if (solves.fetch_add(1) >= c.max_solves) {
          out_of_budget.store(true);
          return;
        }
        if (!conv) conv.emplace(m.grid, fftconv::KernelSpec::helmholtz(k));
        std::string status = "ok";
        double rho = 0.0;
        int iterations = 0;
        double residual = 0.0;
        try {
          const auto sol = lippmann::solve_scattering(m, c.incidents[inc].make(k), c.solver, &*conv);
          const auto ff = lippmann::far_field(sol, c.far_directions);
          double v2 = 0.0;
          const double measure = std::pow(m.grid.h, m.grid.dim);
          for (size_t idx = 0; idx < m.q.size(); ++idx)
            if (m.inside[idx]) v2 += std::norm(sol.total[idx] - sol.scattered[idx]) * measure;
          rho = ff.l2_norm() / std::sqrt(v2);
          iterations = sol.diagnostics.iterations;
          residual = sol.diagnostics.relative_residual;
        } catch (const lippmann::NonConvergence&) {
          status = "failed";
          ++failures;
        }
        std::string row = io::fmt(level) + "," + io::fmt(c.grid_levels[level]) + "," + io::fmt(k) + "," +
                          c.incidents[inc].id + "," + io::fmt(rho) + "," + io::fmt(iterations) + "," +
                          io::fmt(residual) + "," + status;
        journal.record(key.str(), row);
        {
          std::lock_guard<std::mutex> lock(rows_mu);
          rows[key.str()] = row;
        }
        ++done_rows;
      }
    }
  };

  std::vector<std::thread> pool;
  const int workers = worker_count();
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  RunResult res;
  res.out_dir = out_dir;
  res.rows_total = rows_total;
  res.rows_done = rows.size();
  res.truncated = out_of_budget.load();

  // deterministic final table, sorted by (level, k, incident)
  io::CsvTable table("level,h,k,incident,rho,iterations,residual,status");
  for (int l = 0; l < static_cast<int>(c.grid_levels.size()); ++l)
    for (int ki = 0; ki < static_cast<int>(ks.size()); ++ki)
      for (int inc = 0; inc < static_cast<int>(c.incidents.size()); ++inc) {
        const auto it = rows.find(SweepRowKey{l, ki, inc}.str());
        if (it != rows.end()) table.rows.push_back(it->second);
      }
  manifest.add_file("rows.csv", table.str());

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.finish(wall, rows.size(), res.truncated);
  if (!res.truncated) journal.remove();

  if (res.truncated)
    res.exit_code = 3;
  else if (failures.load() > 0 && failures.load() == rows_total)
    res.exit_code = 4;
  return res;
}

// ---------------------------------------------------------------------------

inline RunResult run_jump_probe(const ExperimentConfig& c, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  ManifestWriter manifest(c, out_dir);

  const cplx value = c.probe.density_constant;
  volpot::JumpProbeOptions opts;
  opts.base_h = c.probe.base_h;
  opts.max_cells = c.max_cells;
  const auto rep = volpot::symmetric_jump_probe(
      c.shape, [value](const Point&) { return value; }, c.probe.point, c.probe.direction,
      c.probe.offsets, opts);

  io::CsvTable table("eta,h,i,j,re,im");
  for (size_t t = 0; t < rep.offsets.size(); ++t)
    for (int a = 0; a < c.shape.dim; ++a)
      for (int b = 0; b < c.shape.dim; ++b)
        table.add({io::fmt(rep.offsets[t]), io::fmt(rep.grid_h[t]), io::fmt(a), io::fmt(b),
                   io::fmt(rep.jumps[t][a][b].real()), io::fmt(rep.jumps[t][a][b].imag())});
  manifest.add_file("probe_0.csv", table.str());
  manifest.add_file("probe_0.json", volpot::to_json(rep).dump(2) + "\n");

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.finish(wall, rep.offsets.size(), false);
  RunResult res;
  res.out_dir = out_dir;
  res.rows_total = res.rows_done = rep.offsets.size();
  return res;
}

// ---------------------------------------------------------------------------

inline RunResult run_radial(const ExperimentConfig& c, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  ManifestWriter manifest(c, out_dir);
  RowJournal journal(out_dir + "/rows.partial.csv");

  const radial::RadialMedium rm{2, c.shape.radius, c.contrast.value};
  // spectrum and determinant curve
  int ell_max = 0;
  for (const auto& [ell, count] : c.radial.orders) ell_max = std::max(ell_max, ell);
  const auto spectrum = radial::te_spectrum(rm, ell_max, c.radial.k_search_min, c.radial.k_search_max);

  io::CsvTable spec_csv("ell,k,residual");
  for (const auto& r : spectrum.roots) spec_csv.add({io::fmt(r.ell), io::fmt(r.k), io::fmt(r.residual)});
  manifest.add_file("spectrum.csv", spec_csv.str());
  manifest.add_file("spectrum.json", radial::to_json(spectrum).dump(2) + "\n");

  {
    std::string hdr = "k";
    for (int ell = 0; ell <= ell_max; ++ell) hdr += ",d" + std::to_string(ell);
    io::CsvTable curve(hdr);
    const int samples = 400;
    for (int i = 0; i <= samples; ++i) {
      const double k = c.radial.k_search_min +
                       (c.radial.k_search_max - c.radial.k_search_min) * i / samples;
      std::vector<std::string> row{io::fmt(k)};
      for (int ell = 0; ell <= ell_max; ++ell) row.push_back(io::fmt(radial::te_determinant(rm, ell, k)));
      curve.add(row);
    }
    manifest.add_file("determinant_curve.csv", curve.str());
  }

  // rho at each requested root and at the two comparison offsets
  const double h = c.grid_levels.front();
  const MediumField med =
      geometry::rasterize(c.shape, c.contrast, geometry::make_grid(c.shape, h, c.margin, c.max_cells));
  size_t solves = 0, failures = 0, rows_total = 0;
  bool truncated = false;
  io::CsvTable dip_csv("ell,root_index,position,k,rho,iterations,status");
  std::map<std::string, std::string> rows;
  for (const auto& [key, row] : journal.done) rows[key] = row;

  for (const auto& [ell, count] : c.radial.orders) {
    const auto roots = radial::first_roots(rm, ell, count, c.radial.k_search_min, c.radial.k_search_max);
    for (int ri = 0; ri < count; ++ri) {
      const struct {
        const char* pos;
        double k;
      } evals[3] = {{"root", roots[ri].k},
                    {"minus", roots[ri].k - c.radial.offset},
                    {"plus", roots[ri].k + c.radial.offset}};
      for (const auto& ev : evals) {
        ++rows_total;
        const std::string key = std::to_string(ell) + "|" + std::to_string(ri) + "|" + ev.pos;
        if (rows.count(key)) continue;
        if (solves++ >= c.max_solves) {
          truncated = true;
          break;
        }
        std::string status = "ok";
        double rho = 0.0;
        int iterations = 0;
        try {
          const auto w = waves::herglotz_wave(ev.k, waves::FourierDensity::harmonic(ell));
          const auto sol = lippmann::solve_scattering(med, w, c.solver);
          const auto ff = lippmann::far_field(sol, c.far_directions);
          double v2 = 0.0;
          const double measure = std::pow(med.grid.h, 2);
          for (size_t idx = 0; idx < med.q.size(); ++idx)
            if (med.inside[idx]) v2 += std::norm(sol.total[idx] - sol.scattered[idx]) * measure;
          rho = ff.l2_norm() / std::sqrt(v2);
          iterations = sol.diagnostics.iterations;
        } catch (const lippmann::NonConvergence&) {
          status = "failed";
          ++failures;
        }
        const std::string row = io::fmt(ell) + "," + io::fmt(ri) + "," + ev.pos + "," + io::fmt(ev.k) +
                                "," + io::fmt(rho) + "," + io::fmt(iterations) + "," + status;
        journal.record(key, row);
        rows[key] = row;
      }
      if (truncated) break;
    }
    if (truncated) break;
  }
  for (const auto& [ell, count] : c.radial.orders) {
    for (int ri = 0; ri < count; ++ri)
      for (const char* pos : {"root", "minus", "plus"}) {
        const auto it = rows.find(std::to_string(ell) + "|" + std::to_string(ri) + "|" + pos);
        if (it != rows.end()) dip_csv.rows.push_back(it->second);
      }
  }
  manifest.add_file("rho_dips.csv", dip_csv.str());

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.finish(wall, rows.size(), truncated);
  if (!truncated) journal.remove();

  RunResult res;
  res.out_dir = out_dir;
  res.rows_total = rows_total;
  res.rows_done = rows.size();
  res.truncated = truncated;
  if (truncated)
    res.exit_code = 3;
  else if (failures > 0 && failures == rows_total)
    res.exit_code = 4;
  return res;
}

// ---------------------------------------------------------------------------

inline RunResult run_nonradiating(const ExperimentConfig& c, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  ManifestWriter manifest(c, out_dir);
  const double k = c.source.k;

  const Shape disk = Shape::disk({0, 0, 0}, 1.0);
  const Shape square = Shape::polygon({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
  auto bump_source = [k](const Point& p) {
    const double r2 = p.x * p.x + p.y * p.y;
    const double one = 1.0 - r2;
    const double lap = -16.0 * one * one * one + 48.0 * r2 * one * one;
    return cplx(lap + k * k * one * one * one * one, 0.0);
  };

  io::CsvTable table("level,h,source,farfield_l2,source_l2,normalized");
  size_t rows = 0;
  for (int level = 0; level < static_cast<int>(c.grid_levels.size()); ++level) {
    const double h = c.grid_levels[level];
    struct Entry {
      const char* name;
      Shape shape;
      std::function<cplx(const Point&)> f;
    };
    const std::vector<Entry> entries = {
        {"bump", disk, bump_source},
        {"indicator", disk, [](const Point&) { return cplx(1.0, 0.0); }},
        {"corner_indicator", square, [](const Point&) { return cplx(1.0, 0.0); }},
    };
    for (const auto& e : entries) {
      const geometry::Grid g = geometry::make_grid(e.shape, h, c.margin, c.max_cells);
      volpot::DensityField f{g, e.shape, e.f};
      const auto ff = lippmann::far_field_of_source(f, k, c.far_directions);
      const auto vals = lippmann::sample_density(f);
      double s2 = 0.0;
      for (const auto& v : vals) s2 += std::norm(v);
      s2 *= h * h;
      const double norm_ff = ff.l2_norm();
      table.add({io::fmt(level), io::fmt(h), e.name, io::fmt(norm_ff), io::fmt(std::sqrt(s2)),
                 io::fmt(norm_ff / std::sqrt(s2))});
      ++rows;
    }
  }
  manifest.add_file("norms.csv", table.str());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.finish(wall, rows, false);
  RunResult res;
  res.out_dir = out_dir;
  res.rows_total = res.rows_done = rows;
  return res;
}

// ---------------------------------------------------------------------------

inline waves::FourierDensity random_bounded_density(std::mt19937_64& rng, double c1_bound,
                                                    double min_abs) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  waves::FourierDensity d;
  d.min_order = -4;
  d.coeff.assign(9, cplx(0.0, 0.0));
  d.coeff[4] = cplx(2.0, 0.0);
  for (int t = 0; t < 9; ++t)
    if (t != 4) d.coeff[t] = {u(rng), u(rng)};
  if (d.c1_norm() > c1_bound || d.min_abs() < min_abs)
    throw std::logic_error("random_bounded_density: construction violated its own bounds");
  return d;
}

inline RunResult run_stationary(const ExperimentConfig& c, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  ManifestWriter manifest(c, out_dir);
  std::mt19937_64 rng(c.seed);

  io::CsvTable table("density,k,sup_residual,scaled");
  size_t rows = 0;
  for (int d = 0; d < c.stationary.densities; ++d) {
    const auto phi = random_bounded_density(rng, c.stationary.c1_bound, c.stationary.min_abs);
    for (double k : c.stationary.k_ladder) {
      double worst = 0.0;
      for (double r : c.stationary.radii) {
        const auto res = waves::stationary_phase_farfield(phi, k, {r * std::cos(0.3), r * std::sin(0.3), 0});
        worst = std::max(worst, res.residual);
      }
      table.add({io::fmt(d), io::fmt(k), io::fmt(worst), io::fmt(worst * std::sqrt(k))});
      ++rows;
    }
  }
  manifest.add_file("ladder.csv", table.str());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.finish(wall, rows, false);
  RunResult res;
  res.out_dir = out_dir;
  res.rows_total = res.rows_done = rows;
  return res;
}

}  // namespace detail

/// Runs the configured experiment into out_dir. Exit codes: 0 success,
/// 2 validation error (thrown as ConfigError before any solve), 3 budget
/// truncation with partial results, 4 every row failed in the solver.
inline RunResult run_experiment(const ExperimentConfig& c, const std::string& out_dir) {
  validate_config(c);
  switch (c.kind) {
    case ExperimentKind::Sweep:
    case ExperimentKind::CornerScatter:
      return detail::run_sweep(c, out_dir);
    case ExperimentKind::JumpProbe:
      return detail::run_jump_probe(c, out_dir);
    case ExperimentKind::RadialNonscatter:
      return detail::run_radial(c, out_dir);
    case ExperimentKind::NonradiatingSource:
      return detail::run_nonradiating(c, out_dir);
    case ExperimentKind::StationaryPhase:
      return detail::run_stationary(c, out_dir);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Scattering-floor calibration.

struct CalibrationResult {
  std::vector<double> levels;
  std::vector<double> min_rho;
  double rate{0.0};
  double extrapolated{0.0};
  double floor{0.0};
  bool monotone{false};
};

/// Runs the corner sweep at every level, Richardson-extrapolates the
/// min-over-k scattering strength and persists half the limit as the floor.
/// Refuses radial configs whose window contains a determinant root (the dip
/// would poison the floor).
inline CalibrationResult calibrate_floor(const ExperimentConfig& c, const std::string& out_dir) {
  if (c.grid_levels.size() < 3) throw ConfigError("calibrate_floor: need at least 3 grid levels");
  if (c.shape.kind == geometry::ShapeKind::Disk && c.contrast.kind == geometry::ContrastKind::Constant) {
    int ell_max = 0;
    for (const auto& inc : c.incidents)
      if (inc.spec.value("type", "") == "herglotz" && inc.spec.contains("density"))
        ell_max = std::max(ell_max, std::abs(inc.spec.at("density").value("min_order", 0)));
    const radial::RadialMedium rm{2, c.shape.radius, c.contrast.value};
    const auto spec = radial::te_spectrum(rm, ell_max, c.k_min, c.k_max);
    if (!spec.roots.empty())
      throw ConfigError("calibrate_floor: sweep window contains " + std::to_string(spec.roots.size()) +
                        " radial non-scattering wavenumbers; the floor would be contaminated");
  }

  const auto run = run_experiment(c, out_dir);
  if (run.exit_code != 0) throw std::runtime_error("calibrate_floor: sweep did not complete");

  // min over k per level, from the written table
  const json manifest = json::parse(io::read_file(out_dir + "/manifest.json"));
  std::istringstream in(io::read_file(out_dir + "/rows.csv"));
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> mins(c.grid_levels.size(), std::numeric_limits<double>::max());
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    const int level = std::stoi(field);
    std::getline(row, field, ',');  // h
    std::getline(row, field, ',');  // k
    std::getline(row, field, ',');  // incident
    std::getline(row, field, ',');  // rho
    const double rho = std::stod(field);
    std::getline(row, field, ',');
    std::getline(row, field, ',');
    std::getline(row, field, ',');  // status
    if (field == "ok") mins[level] = std::min(mins[level], rho);
  }

  CalibrationResult cal;
  cal.levels = c.grid_levels;
  cal.min_rho = mins;
  const size_t n = mins.size();
  const double d1 = mins[n - 3] - mins[n - 2];
  const double d2 = mins[n - 2] - mins[n - 1];
  cal.monotone = (d1 > 0.0) == (d2 > 0.0) && std::abs(d2) < std::abs(d1) && d2 != 0.0;
  if (cal.monotone) {
    cal.rate = std::log2(std::abs(d1) / std::abs(d2));
    cal.extrapolated = mins[n - 1] - d2 / (std::pow(2.0, cal.rate) - 1.0);
    if (cal.extrapolated <= 0.0) cal.monotone = false;
  }
  if (!cal.monotone) {
    cal.extrapolated = mins[n - 1];  // fall back to the finest level, flagged
  }
  cal.floor = 0.5 * cal.extrapolated;

  json j;
  j["levels"] = cal.levels;
  j["min_rho"] = cal.min_rho;
  j["rate"] = cal.rate;
  j["extrapolated"] = cal.extrapolated;
  j["floor"] = cal.floor;
  j["monotone"] = cal.monotone;
  io::write_file(out_dir + "/rho_floor.json", j.dump(2) + "\n");
  return cal;
}

// ---------------------------------------------------------------------------
// Plot emission: self-contained scripts plus per-curve data files.

namespace detail {

inline const char* kPlotPreamble =
    "#!/usr/bin/env python3\n"
    "# reads the CSV files next to this script and writes PNG plots\n"
    "import csv, math, os\n"
    "import matplotlib\n"
    "matplotlib.use('Agg')\n"
    "import matplotlib.pyplot as plt\n"
    "here = os.path.dirname(os.path.abspath(__file__))\n"
    "def load(name):\n"
    "    with open(os.path.join(here, name)) as f:\n"
    "        r = csv.DictReader(f)\n"
    "        return list(r)\n";

}  // namespace detail

/// Emits plot data and scripts for a finished result directory; returns the
/// number of files written. Outputs land in <dir>/plots.
inline int emit_plots(const std::string& result_dir) {
  const std::string mpath = result_dir + "/manifest.json";
  if (!fs::exists(mpath)) throw std::runtime_error("emit_plots: no manifest in " + result_dir);
  const json manifest = json::parse(io::read_file(mpath));
  const std::string kind = manifest.at("kind");
  const std::string pdir = result_dir + "/plots";
  fs::create_directories(pdir);
  json plots_manifest;
  plots_manifest["source_manifest"] = "../manifest.json";
  plots_manifest["files"] = json::array();
  int count = 0;
  auto emit = [&](const std::string& name, const std::string& content) {
    io::write_file(pdir + "/" + name, content);
    plots_manifest["files"].push_back({{"path", name}, {"fnv1a64", io::checksum_hex(content)}});
    ++count;
  };

  if (kind == "sweep" || kind == "corner_scatter") {
    // one rho-vs-k data file per incident wave
    std::istringstream in(io::read_file(result_dir + "/rows.csv"));
    std::string line;
    std::getline(in, line);
    std::map<std::string, io::CsvTable> per_incident;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string level, h, k, incident, rho, rest;
      std::getline(row, level, ',');
      std::getline(row, h, ',');
      std::getline(row, k, ',');
      std::getline(row, incident, ',');
      std::getline(row, rho, ',');
      auto it = per_incident.find(incident);
      if (it == per_incident.end())
        it = per_incident.emplace(incident, io::CsvTable("level,h,k,rho")).first;
      it->second.add({level, h, k, rho});
    }
    for (const auto& [incident, table] : per_incident) emit("rho_vs_k_" + incident + ".csv", table.str());
    std::string script = detail::kPlotPreamble;
    script += "names = " + [&] {
      std::string s = "[";
      for (const auto& [incident, _] : per_incident) s += "'rho_vs_k_" + incident + ".csv',";
      return s + "]";
    }() + "\n";
    script +=
        "plt.figure()\n"
        "for n in names:\n"
        "    rows = load(n)\n"
        "    levels = sorted(set(r['level'] for r in rows))\n"
        "    ks = [float(r['k']) for r in rows if r['level'] == levels[-1]]\n"
        "    rhos = [float(r['rho']) for r in rows if r['level'] == levels[-1]]\n"
        "    plt.semilogy(ks, rhos, label=n)\n"
        "plt.xlabel('k'); plt.ylabel('rho'); plt.legend(); plt.savefig(os.path.join(here, 'rho_vs_k.png'))\n";
    emit("plot_rho_vs_k.py", script);
  } else if (kind == "jump_probe") {
    emit("plot_jump_traces.py",
         std::string(detail::kPlotPreamble) +
             "rows = load(os.path.join('..', 'probe_0.csv'))\n"
             "import collections\n"
             "series = collections.defaultdict(list)\n"
             "for r in rows:\n"
             "    series[(r['i'], r['j'])].append((float(r['eta']), abs(float(r['re']))))\n"
             "plt.figure()\n"
             "for key, pts in series.items():\n"
             "    pts.sort()\n"
             "    plt.loglog([p[0] for p in pts], [max(p[1], 1e-18) for p in pts], label=str(key))\n"
             "plt.xlabel('eta'); plt.ylabel('|jump|'); plt.legend()\n"
             "plt.savefig(os.path.join(here, 'jump_traces.png'))\n");
  } else if (kind == "radial_nonscatter") {
    // overlay data: determinant curves plus root markers matching the spectrum rows
    emit("plot_radial.py",
         std::string(detail::kPlotPreamble) +
             "curve = load(os.path.join('..', 'determinant_curve.csv'))\n"
             "roots = load(os.path.join('..', 'spectrum.csv'))\n"
             "dips = load(os.path.join('..', 'rho_dips.csv'))\n"
             "plt.figure()\n"
             "ks = [float(r['k']) for r in curve]\n"
             "cols = [c for c in curve[0] if c != 'k']\n"
             "for c in cols:\n"
             "    plt.plot(ks, [float(r[c]) for r in curve], label=c)\n"
             "for r in roots:\n"
             "    plt.axvline(float(r['k']), color='gray', lw=0.5)\n"
             "plt.legend(); plt.xlabel('k'); plt.savefig(os.path.join(here, 'determinants.png'))\n"
             "plt.figure()\n"
             "plt.semilogy([float(r['k']) for r in dips], [float(r['rho']) for r in dips], 'o')\n"
             "plt.xlabel('k'); plt.ylabel('rho'); plt.savefig(os.path.join(here, 'rho_dips.png'))\n");
  } else if (kind == "stationary_phase") {
    emit("plot_ladder.py",
         std::string(detail::kPlotPreamble) +
             "rows = load(os.path.join('..', 'ladder.csv'))\n"
             "import collections\n"
             "series = collections.defaultdict(list)\n"
             "for r in rows:\n"
             "    series[r['density']].append((float(r['k']), float(r['scaled'])))\n"
             "plt.figure()\n"
             "for d, pts in series.items():\n"
             "    pts.sort()\n"
             "    plt.loglog([p[0] for p in pts], [p[1] for p in pts], 'o-', label=d)\n"
             "plt.xlabel('k'); plt.ylabel('scaled residual'); plt.legend()\n"
             "plt.savefig(os.path.join(here, 'ladder.png'))\n");
  } else if (kind == "nonradiating_source") {
    emit("plot_norms.py",
         std::string(detail::kPlotPreamble) +
             "rows = load(os.path.join('..', 'norms.csv'))\n"
             "import collections\n"
             "series = collections.defaultdict(list)\n"
             "for r in rows:\n"
             "    series[r['source']].append((float(r['h']), float(r['normalized'])))\n"
             "plt.figure()\n"
             "for s, pts in series.items():\n"
             "    pts.sort()\n"
             "    plt.loglog([p[0] for p in pts], [p[1] for p in pts], 'o-', label=s)\n"
             "plt.xlabel('h'); plt.ylabel('normalized far field'); plt.legend()\n"
             "plt.savefig(os.path.join(here, 'norms.png'))\n");
  }
  io::write_file(pdir + "/plots_manifest.json", plots_manifest.dump(2) + "\n");
  ++count;
  return count;
}

/// Checks a manifest document against the shipped schema (required keys,
/// types, file-entry structure); returns human-readable problems.
inline std::vector<std::string> manifest_schema_errors(const json& m) {
  std::vector<std::string> errs;
  auto need = [&](const char* key, json::value_t type) {
    if (!m.contains(key)) {
      errs.push_back(std::string("missing key: ") + key);
      return false;
    }
    if (type == json::value_t::number_unsigned) {
      if (!m.at(key).is_number()) errs.push_back(std::string("wrong type: ") + key);
    } else if (m.at(key).type() != type) {
      errs.push_back(std::string("wrong type: ") + key);
    }
    return true;
  };
  need("version", json::value_t::string);
  need("kind", json::value_t::string);
  need("seed", json::value_t::number_unsigned);
  need("config", json::value_t::object);
  need("truncated", json::value_t::boolean);
  need("row_count", json::value_t::number_unsigned);
  if (need("timings", json::value_t::object) && !m["timings"].contains("wall_seconds"))
    errs.push_back("timings.wall_seconds missing");
  if (need("generated_files", json::value_t::array)) {
    for (const auto& f : m["generated_files"]) {
      if (!f.contains("path") || !f.contains("bytes") || !f.contains("fnv1a64"))
        errs.push_back("generated_files entry missing path/bytes/fnv1a64");
    }
  }
  return errs;
}

/// Verifies that every file listed in a result manifest exists with the
/// recorded checksum.
inline std::vector<std::string> manifest_integrity_errors(const std::string& result_dir) {
  const json m = json::parse(io::read_file(result_dir + "/manifest.json"));
  std::vector<std::string> errs = manifest_schema_errors(m);
  for (const auto& f : m.at("generated_files")) {
    const std::string path = result_dir + "/" + f.at("path").get<std::string>();
    if (!fs::exists(path)) {
      errs.push_back("missing file: " + path);
      continue;
    }
    const std::string content = io::read_file(path);
    if (io::checksum_hex(content) != f.at("fnv1a64").get<std::string>())
      errs.push_back("checksum mismatch: " + path);
  }
  return errs;
}

}  // namespace helmlab::lab
