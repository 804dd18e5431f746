#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "helmlab/fft_conv.hpp"
#include "helmlab/geometry.hpp"
#include "helmlab/gmres.hpp"
#include "helmlab/volume_potential.hpp"
#include "helmlab/waves.hpp"

// Forward scattering solver: the scattered field u of a penetrable medium
// solves the volume integral equation
//   u(x) + int Phi_k(x,y) chi(y) u(y) dy = -int Phi_k(x,y) chi(y) v(y) dy,
//   chi = k^2 (1 - n) 1_D,
// whose solutions are outgoing by construction. The integral operator is an
// FFT convolution on the doubled torus; the linear system is solved by GMRES.

namespace helmlab::lippmann {

using geometry::Grid;
using geometry::MediumField;
using waves::IncidentWave;

struct ComplexGridField {
  Grid grid;
  std::vector<cplx> values;
};

struct SolverOptions {
  double tol{1e-8};
  int restart{80};
  int max_iterations{4000};
  int min_cells_per_wavelength{10};
};

struct NonConvergence : std::runtime_error {
  explicit NonConvergence(std::string msg, std::vector<double> hist)
      : std::runtime_error(std::move(msg)), history(std::move(hist)) {}
  std::vector<double> history;
};

struct ScatterSolution {
  MediumField medium;
  IncidentWave incident;
  double k{0.0};
  std::vector<cplx> scattered;  // u on the grid
  std::vector<cplx> total;      // u + v
  krylov::GmresResult diagnostics;
};

namespace detail {

inline std::vector<cplx> sample_incident(const IncidentWave& w, const Grid& g) {
  std::vector<cplx> v(g.size());
  for (int k = 0; k < g.counts[2]; ++k)
    for (int j = 0; j < g.counts[1]; ++j)
      for (int i = 0; i < g.counts[0]; ++i) v[g.index(i, j, k)] = waves::eval_incident(w, g.cell_center(i, j, k));
  return v;
}

inline std::vector<cplx> contrast(const MediumField& m, double k) {
  std::vector<cplx> chi(m.grid.size(), cplx(0.0, 0.0));
  for (size_t i = 0; i < chi.size(); ++i)
    if (m.inside[i]) chi[i] = k * k * (1.0 - m.q[i]);
  return chi;
}

inline void check_resolution(const MediumField& m, double k, int min_cpw) {
  double n_max = 1.0;
  for (size_t i = 0; i < m.q.size(); ++i)
    if (m.inside[i]) n_max = std::max(n_max, m.q[i]);
  const double lambda_min = 2.0 * M_PI / (k * std::sqrt(n_max));
  if (m.grid.h > lambda_min / min_cpw)
    throw std::invalid_argument("solve_scattering: grid does not resolve the wavelength (need h <= " +
                                std::to_string(lambda_min / min_cpw) + ", have " + std::to_string(m.grid.h) + ")");
}

}  // namespace detail

/// One application of the integral operator to the incident field (first
/// Born term); also the right-hand side of the linear system up to sign.
inline std::vector<cplx> born_approximation(const MediumField& m, const IncidentWave& w) {
  const double k = w.k;
  fftconv::KernelConvolver conv(m.grid, fftconv::KernelSpec::helmholtz(k));
  const auto v = detail::sample_incident(w, m.grid);
  const auto chi = detail::contrast(m, k);
  std::vector<cplx> tmp(m.grid.size());
  for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = chi[i] * v[i];
  std::vector<cplx> out(m.grid.size());
  conv.apply(tmp.data(), out.data());
  for (auto& x : out) x = -x;
  return out;
}

/// The convolver argument lets sweeps reuse one kernel table and FFT plan per
/// (grid, k) across several right-hand sides; it must match the grid and k.
inline ScatterSolution solve_scattering(const MediumField& m, const IncidentWave& w,
                                        const SolverOptions& opts = {},
                                        fftconv::KernelConvolver* shared = nullptr) {
  const double k = w.k;
  detail::check_resolution(m, k, opts.min_cells_per_wavelength);
  ScatterSolution sol;
  sol.medium = m;
  sol.incident = w;
  sol.k = k;

  const auto v = detail::sample_incident(w, m.grid);
  const auto chi = detail::contrast(m, k);
  const size_t n = m.grid.size();

  bool homogeneous = true;
  for (size_t i = 0; i < n; ++i)
    if (chi[i] != cplx(0.0)) {
      homogeneous = false;
      break;
    }
  if (homogeneous) {
    sol.scattered.assign(n, cplx(0.0, 0.0));
    sol.total = v;
    sol.diagnostics.converged = true;
    return sol;
  }

  std::unique_ptr<fftconv::KernelConvolver> own;
  if (!shared) own = std::make_unique<fftconv::KernelConvolver>(m.grid, fftconv::KernelSpec::helmholtz(k));
  fftconv::KernelConvolver& conv = shared ? *shared : *own;
  std::vector<cplx> tmp(n), b(n);
  for (size_t i = 0; i < n; ++i) tmp[i] = chi[i] * v[i];
  conv.apply(tmp.data(), b.data());
  for (auto& x : b) x = -x;

  auto apply = [&](const cplx* in, cplx* out) {
    for (size_t i = 0; i < n; ++i) tmp[i] = chi[i] * in[i];
    conv.apply(tmp.data(), out);
    for (size_t i = 0; i < n; ++i) out[i] += in[i];
  };

  std::vector<cplx> u;
  krylov::GmresOptions gopts{opts.tol, opts.restart, opts.max_iterations};
  sol.diagnostics = krylov::gmres(apply, b, u, gopts);
  if (!sol.diagnostics.converged)
    throw NonConvergence("solve_scattering: GMRES stalled at relative residual " +
                             std::to_string(sol.diagnostics.relative_residual),
                         sol.diagnostics.history);
  sol.scattered = std::move(u);
  sol.total.resize(n);
  for (size_t i = 0; i < n; ++i) sol.total[i] = sol.scattered[i] + v[i];
  return sol;
}

// ---------------------------------------------------------------------------

struct FarFieldPattern {
  double k{0.0};
  int dim{2};
  std::vector<Point> directions;  // unit vectors
  std::vector<double> angles;     // 2D convenience: angle per direction
  std::vector<cplx> values;
  double weight{0.0};  // quadrature weight per direction (uniform sets)

  double l2_norm() const {
    double s = 0.0;
    for (const cplx& v : values) s += std::norm(v);
    return std::sqrt(weight * s);
  }
};

/// Far-field normalization constant c_m in u^inf = -c_m k^2 int e^{-ik x.y} (1-n) u_tot dy;
/// fixed by matching the outgoing kernel's large-argument form (validated by
/// the large-radius extrapolation tests).
inline cplx farfield_constant(double k, int dim) {
  if (dim == 3) return cplx(1.0 / (4.0 * M_PI), 0.0);
  return std::exp(cplx(0.0, 0.25 * M_PI)) / std::sqrt(8.0 * M_PI * k);
}

inline std::vector<Point> uniform_directions(int count, int dim) {
  std::vector<Point> dirs;
  dirs.reserve(count);
  if (dim == 2) {
    for (int i = 0; i < count; ++i) {
      const double t = 2.0 * M_PI * i / count;
      dirs.push_back({std::cos(t), std::sin(t), 0.0});
    }
  } else {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      dirs.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
    }
  }
  return dirs;
}

namespace detail {

// u^inf(x_hat) = c_m int e^{-ik x_hat . y} f(y) dy for a grid density f.
inline std::vector<cplx> farfield_of_density(const Grid& g, std::span<const cplx> f, double k,
                                             std::span<const Point> dirs, cplx scale) {
  const double measure = std::pow(g.h, g.dim);
  std::vector<cplx> out(dirs.size(), cplx(0.0, 0.0));
  for (int kz = 0; kz < g.counts[2]; ++kz)
    for (int jy = 0; jy < g.counts[1]; ++jy)
      for (int ix = 0; ix < g.counts[0]; ++ix) {
        const size_t idx = g.index(ix, jy, kz);
        if (f[idx] == cplx(0.0)) continue;
        const Point y = g.cell_center(ix, jy, kz);
        const cplx fm = f[idx] * measure;
        for (size_t d = 0; d < dirs.size(); ++d)
          out[d] += fm * std::exp(cplx(0.0, -k * dot(dirs[d], y)));
      }
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace detail

inline FarFieldPattern far_field(const ScatterSolution& sol, int direction_count = 128) {
  const int dim = sol.medium.grid.dim;
  if ((dim == 2 && direction_count < 16) || (dim == 3 && direction_count < 50))
    throw std::invalid_argument("far_field: too few directions");
  FarFieldPattern ff;
  ff.k = sol.k;
  ff.dim = dim;
  ff.directions = uniform_directions(direction_count, dim);
  if (dim == 2)
    for (const auto& d : ff.directions) ff.angles.push_back(std::atan2(d.y, d.x));
  ff.weight = (dim == 2 ? 2.0 * M_PI : 4.0 * M_PI) / direction_count;
  const Grid& g = sol.medium.grid;
  std::vector<cplx> f(g.size(), cplx(0.0, 0.0));
  const double k2 = sol.k * sol.k;
  for (size_t i = 0; i < f.size(); ++i)
    if (sol.medium.inside[i]) f[i] = -k2 * (1.0 - sol.medium.q[i]) * sol.total[i];
  ff.values = detail::farfield_of_density(g, f, sol.k, ff.directions, farfield_constant(sol.k, dim));
  return ff;
}

/// Far field at caller-chosen directions (values in the same order).
inline std::vector<cplx> far_field_at(const ScatterSolution& sol, std::span<const Point> dirs) {
  const Grid& g = sol.medium.grid;
  std::vector<cplx> f(g.size(), cplx(0.0, 0.0));
  const double k2 = sol.k * sol.k;
  for (size_t i = 0; i < f.size(); ++i)
    if (sol.medium.inside[i]) f[i] = -k2 * (1.0 - sol.medium.q[i]) * sol.total[i];
  return detail::farfield_of_density(g, f, sol.k, dirs, farfield_constant(sol.k, g.dim));
}

/// Scattered field at an arbitrary point via the representation integral.
inline cplx evaluate_scattered_at(const ScatterSolution& sol, const Point& x) {
  const Grid& g = sol.medium.grid;
  const double measure = std::pow(g.h, g.dim);
  const double k2 = sol.k * sol.k;
  cplx acc = 0.0;
  for (int kz = 0; kz < g.counts[2]; ++kz)
    for (int jy = 0; jy < g.counts[1]; ++jy)
      for (int ix = 0; ix < g.counts[0]; ++ix) {
        const size_t idx = g.index(ix, jy, kz);
        if (!sol.medium.inside[idx]) continue;
        const cplx chi = k2 * (1.0 - sol.medium.q[idx]);
        if (chi == cplx(0.0)) continue;
        const Point y = g.cell_center(ix, jy, kz);
        acc -= kernels::helmholtz_kernel(x, y, sol.k, g.dim).value * chi * sol.total[idx] * measure;
      }
  return acc;
}

// ---------------------------------------------------------------------------
// Source problem: u with (Delta + k^2) u = f, outgoing; u = -(Phi_k * f).

struct SourceSolution {
  Grid grid;
  std::vector<cplx> u;
};

inline std::vector<cplx> sample_density(const volpot::DensityField& f) {
  std::vector<cplx> vals(f.grid.size(), cplx(0.0, 0.0));
  for (int kz = 0; kz < f.grid.counts[2]; ++kz)
    for (int jy = 0; jy < f.grid.counts[1]; ++jy)
      for (int ix = 0; ix < f.grid.counts[0]; ++ix) {
        const Point c = f.grid.cell_center(ix, jy, kz);
        vals[f.grid.index(ix, jy, kz)] = f.value_at(c);
      }
  return vals;
}

inline SourceSolution solve_source_problem(const volpot::DensityField& f, double k) {
  fftconv::KernelConvolver conv(f.grid, fftconv::KernelSpec::helmholtz(k));
  const auto vals = sample_density(f);
  SourceSolution sol;
  sol.grid = f.grid;
  sol.u.resize(f.grid.size());
  conv.apply(vals.data(), sol.u.data());
  for (auto& x : sol.u) x = -x;
  return sol;
}

inline FarFieldPattern far_field_of_source(const volpot::DensityField& f, double k,
                                           int direction_count = 128) {
  FarFieldPattern ff;
  const int dim = f.grid.dim;
  ff.k = k;
  ff.dim = dim;
  ff.directions = uniform_directions(direction_count, dim);
  if (dim == 2)
    for (const auto& d : ff.directions) ff.angles.push_back(std::atan2(d.y, d.x));
  ff.weight = (dim == 2 ? 2.0 * M_PI : 4.0 * M_PI) / direction_count;
  const auto vals = sample_density(f);
  ff.values = detail::farfield_of_density(f.grid, vals, k, ff.directions, -farfield_constant(k, dim));
  return ff;
}

// ---------------------------------------------------------------------------

/// Normalized scattering strength rho = |u^inf|_2 / |v|_{L2(D)}; values near
/// zero flag a non-scattering candidate.
inline double nonscattering_residual(const MediumField& m, const IncidentWave& w,
                                     const SolverOptions& opts = {}, int direction_count = 128,
                                     fftconv::KernelConvolver* shared = nullptr) {
  const auto sol = solve_scattering(m, w, opts, shared);
  const auto ff = far_field(sol, direction_count);
  double v2 = 0.0;
  const double measure = std::pow(m.grid.h, m.grid.dim);
  for (int kz = 0; kz < m.grid.counts[2]; ++kz)
    for (int jy = 0; jy < m.grid.counts[1]; ++jy)
      for (int ix = 0; ix < m.grid.counts[0]; ++ix) {
        const size_t idx = m.grid.index(ix, jy, kz);
        if (!m.inside[idx]) continue;
        v2 += std::norm(waves::eval_incident(w, m.grid.cell_center(ix, jy, kz))) * measure;
      }
  if (v2 == 0.0) throw std::invalid_argument("nonscattering_residual: incident field vanishes on D");
  return ff.l2_norm() / std::sqrt(v2);
}

// ---------------------------------------------------------------------------
// Exports.

inline void write_field_binary(const std::string& path, const Grid& g, std::span<const cplx> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field_binary: cannot open " + path);
  out.write("CGF1", 4);
  const int32_t dim = g.dim;
  int32_t counts[3] = {g.counts[0], g.counts[1], g.counts[2]};
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(counts), 12);
  out.write(reinterpret_cast<const char*>(&g.h), 8);
  double origin[3] = {g.origin.x, g.origin.y, g.origin.z};
  out.write(reinterpret_cast<const char*>(origin), 24);
  const int64_t n = static_cast<int64_t>(values.size());
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (const cplx& v : values) {
    const float re = static_cast<float>(v.real()), im = static_cast<float>(v.imag());
    out.write(reinterpret_cast<const char*>(&re), 4);
    out.write(reinterpret_cast<const char*>(&im), 4);
  }
}

/// CSV export for small grids: one row per cell, x[,y[,z]],re,im.
inline void write_field_csv(const std::string& path, const Grid& g, std::span<const cplx> values,
                            size_t max_cells = 1ull << 16) {
  if (g.size() > max_cells)
    throw std::invalid_argument("write_field_csv: grid too large for CSV export; use the binary format");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << (g.dim == 3 ? "x,y,z,re,im\n" : "x,y,re,im\n");
  char buf[160];
  for (int kz = 0; kz < g.counts[2]; ++kz)
    for (int jy = 0; jy < g.counts[1]; ++jy)
      for (int ix = 0; ix < g.counts[0]; ++ix) {
        const Point c = g.cell_center(ix, jy, kz);
        const cplx v = values[g.index(ix, jy, kz)];
        if (g.dim == 3)
          std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", c.x, c.y, c.z, v.real(), v.imag());
        else
          std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", c.x, c.y, v.real(), v.imag());
        out << buf;
      }
}

/// Far-field CSV: direction angle(s), Re, Im.
inline void write_far_field_csv(const std::string& path, const FarFieldPattern& ff) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_far_field_csv: cannot open " + path);
  char buf[160];
  if (ff.dim == 2) {
    out << "theta,re,im\n";
    for (size_t i = 0; i < ff.values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", ff.angles[i], ff.values[i].real(),
                    ff.values[i].imag());
      out << buf;
    }
  } else {
    out << "theta,phi,re,im\n";
    for (size_t i = 0; i < ff.values.size(); ++i) {
      const Point& d = ff.directions[i];
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", std::acos(std::clamp(d.z, -1.0, 1.0)),
                    std::atan2(d.y, d.x), ff.values[i].real(), ff.values[i].imag());
      out << buf;
    }
  }
}

inline ComplexGridField read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field_binary: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "CGF1") throw std::runtime_error("read_field_binary: bad magic");
  ComplexGridField f;
  int32_t dim, counts[3];
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(counts), 12);
  double h, origin[3];
  in.read(reinterpret_cast<char*>(&h), 8);
  in.read(reinterpret_cast<char*>(origin), 24);
  int64_t n;
  in.read(reinterpret_cast<char*>(&n), 8);
  f.grid.dim = dim;
  f.grid.counts = {counts[0], counts[1], counts[2]};
  f.grid.h = h;
  f.grid.origin = {origin[0], origin[1], origin[2]};
  f.values.resize(static_cast<size_t>(n));
  for (auto& v : f.values) {
    float re, im;
    in.read(reinterpret_cast<char*>(&re), 4);
    in.read(reinterpret_cast<char*>(&im), 4);
    v = {re, im};
  }
  return f;
}

}  // namespace helmlab::lippmann
