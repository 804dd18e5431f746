#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "helmlab/fft_conv.hpp"
#include "helmlab/geometry.hpp"
#include "helmlab/kernels.hpp"
#include "helmlab/point.hpp"

// Newtonian volume potentials of densities supported on a shape: values,
// first derivatives, interior/exterior second derivatives, and the
// symmetric-jump probe across the boundary. Values use the midpoint rule over
// cell centers with the cell containing the evaluation point replaced by the
// closed-form integral over the disk/ball of equal measure. Derivatives use
// subtracted forms that move the singular mass onto a boundary integral, e.g.
//   d2w_ij(x) = int_D [psi(y)-psi(x)] d2Phi_ij(x,y) dy
//             - psi(x) oint_dD dPhi_j(x,y) nu_i(y) ds_y
// inside D, and the directly differentiated sum outside, with local 4x4
// subdivision of cells near the evaluation point.

namespace helmlab::volpot {

using geometry::Grid;
using geometry::Shape;

/// Density over a shape: an analytic expression sampled at cell centers,
/// zero outside the cell-center indicator of D.
struct DensityField {
  Grid grid;
  Shape support;
  std::function<cplx(const Point&)> expr;
  double holder_exponent{1.0};
  double sup_norm{0.0};

  cplx value_at(const Point& cell_center) const {
    return geometry::contains(support, cell_center) ? expr(cell_center) : cplx(0.0, 0.0);
  }
};

inline DensityField make_density(const Shape& s, const Grid& g,
                                 std::function<cplx(const Point&)> expr, double holder_exponent = 1.0) {
  DensityField d{g, s, std::move(expr), holder_exponent, 0.0};
  // record the sup norm over a coarse sample of inside cells
  const int stride = std::max(1, g.counts[0] / 64);
  for (int k = 0; k < g.counts[2]; k += stride)
    for (int j = 0; j < g.counts[1]; j += stride)
      for (int i = 0; i < g.counts[0]; i += stride) {
        const Point c = g.cell_center(i, j, k);
        if (geometry::contains(s, c)) d.sup_norm = std::max(d.sup_norm, std::abs(d.expr(c)));
      }
  return d;
}

namespace detail {

template <class Fn>
void for_each_cell(const Grid& g, Fn&& fn) {
  for (int k = 0; k < g.counts[2]; ++k)
    for (int j = 0; j < g.counts[1]; ++j)
      for (int i = 0; i < g.counts[0]; ++i) fn(i, j, k, g.cell_center(i, j, k));
}

}  // namespace detail

/// w(x) = int_D psi(y) Phi(x,y) dy at arbitrary points.
inline std::vector<cplx> volume_potential(const DensityField& d, std::span<const Point> points) {
  const Grid& g = d.grid;
  const int dim = g.dim;
  const double measure = std::pow(g.h, dim);
  const double self = kernels::laplace_selfcell_integral(g.h, dim);
  std::vector<cplx> out(points.size(), cplx(0.0, 0.0));
  for (size_t p = 0; p < points.size(); ++p) {
    const Point x = points[p];
    int si, sj, sk;
    const bool in_grid = g.locate(x, si, sj, sk);
    cplx acc = 0.0;
    detail::for_each_cell(g, [&](int i, int j, int k, const Point& c) {
      const cplx psi = d.value_at(c);
      if (psi == cplx(0.0)) return;
      if (in_grid && i == si && j == sj && k == sk) {
        acc += psi * self;
        return;
      }
      acc += psi * measure * kernels::laplace_kernel(x, c, dim).value;
    });
    out[p] = acc;
  }
  return out;
}

/// w on the whole grid (cell centers) by FFT; identical quadrature to the
/// pointwise path at cell centers.
inline std::vector<cplx> volume_potential_field(const DensityField& d) {
  fftconv::KernelConvolver conv(d.grid, fftconv::KernelSpec::laplace());
  std::vector<cplx> psi(d.grid.size(), cplx(0.0, 0.0));
  detail::for_each_cell(d.grid, [&](int i, int j, int k, const Point& c) {
    psi[d.grid.index(i, j, k)] = d.value_at(c);
  });
  std::vector<cplx> out(d.grid.size());
  conv.apply(psi.data(), out.data());
  return out;
}

struct GradientOptions {
  int boundary_count{1024};
  double subdivide_radius_cells{4.0};
  int subdivisions{4};
};

/// Gradient of the potential by the subtracted form
///   int_D [psi(y) - psi(x)] dPhi(x,y) dy - psi(x) oint_dD Phi(x,y) nu(y) ds,
/// an exact rearrangement via the divergence theorem; the subtracted
/// integrand is integrable across the singularity. Cells near x get 4x4
/// refinement; the boundary node count adapts to the distance from dD.
inline std::vector<std::array<cplx, 3>> volpot_gradient(const DensityField& d,
                                                        std::span<const Point> points,
                                                        const GradientOptions& opts = {}) {
  const Grid& g = d.grid;
  const int dim = g.dim;
  const double measure = std::pow(g.h, dim);
  const double near2 = std::pow(opts.subdivide_radius_cells * g.h, 2);
  const int s = opts.subdivisions;
  const double sub_h = g.h / s;
  const double sub_measure = std::pow(sub_h, dim);
  std::vector<std::array<cplx, 3>> out(points.size());
  for (size_t p = 0; p < points.size(); ++p) {
    const Point x = points[p];
    const cplx psi_x = d.expr(x);
    std::array<cplx, 3> acc{};
    detail::for_each_cell(g, [&](int, int, int, const Point& c) {
      const double r2 = norm2(x - c);
      if (r2 > near2) {
        if (!geometry::contains(d.support, c)) return;
        const cplx coeff = d.expr(c) - psi_x;
        if (coeff == cplx(0.0)) return;
        const auto ke = kernels::laplace_kernel(x, c, dim);
        for (int a = 0; a < dim; ++a) acc[a] += coeff * measure * ke.grad[a];
        return;
      }
      const int s_k = dim == 3 ? s : 1;
      for (int kk = 0; kk < s_k; ++kk)
        for (int jj = 0; jj < s; ++jj)
          for (int ii = 0; ii < s; ++ii) {
            const Point y{c.x - 0.5 * g.h + (ii + 0.5) * sub_h, c.y - 0.5 * g.h + (jj + 0.5) * sub_h,
                          dim == 3 ? c.z - 0.5 * g.h + (kk + 0.5) * sub_h : 0.0};
            if (norm2(y - x) < 0.25 * sub_h * sub_h) continue;
            if (!geometry::contains(d.support, y)) continue;
            const cplx coeff = d.expr(y) - psi_x;
            if (coeff == cplx(0.0)) continue;
            const auto ke = kernels::laplace_kernel(x, y, dim);
            for (int a = 0; a < dim; ++a) acc[a] += coeff * sub_measure * ke.grad[a];
          }
    });
    if (psi_x != cplx(0.0)) {
      const double dist = geometry::boundary_distance(d.support, x);
      const double perimeter_scale = 4.0 * geometry::diameter(d.support);
      const int nb = std::min(1 << 17,
                              std::max(opts.boundary_count,
                                       dist > 0.0 ? static_cast<int>(perimeter_scale * 16.0 / dist) : 0));
      for (const auto& bp : geometry::boundary_sample(d.support, nb)) {
        if (bp.weight == 0.0) continue;
        const cplx phi = kernels::laplace_kernel(x, bp.p, dim).value;
        const std::array<double, 3> nu{bp.normal.x, bp.normal.y, bp.normal.z};
        for (int a = 0; a < dim; ++a) acc[a] -= psi_x * bp.weight * phi * nu[a];
      }
    }
    out[p] = acc;
  }
  return out;
}

using HessMatrix = std::array<std::array<cplx, 3>, 3>;

struct HessianOptions {
  int boundary_count{512};
  double subdivide_radius_cells{6.0};  // cells within this many h of x get 4x4 refinement
  int subdivisions{4};
};

namespace detail {

// Volume part sum_{cells} coeff(y) d2Phi(x, y) with local subdivision.
// coeff(y) = psi(y) - psi_ref (psi_ref = 0 outside D).
inline void hessian_volume_sum(const DensityField& d, const Point& x, cplx psi_ref, bool skip_x_cell,
                               const HessianOptions& opts, HessMatrix& acc) {
  const Grid& g = d.grid;
  const int dim = g.dim;
  const double measure = std::pow(g.h, dim);
  const double near2 = std::pow(opts.subdivide_radius_cells * g.h, 2);
  const int s = opts.subdivisions;
  const double sub_h = g.h / s;
  const double sub_measure = std::pow(sub_h, dim);
  detail::for_each_cell(g, [&](int, int, int, const Point& c) {
    const double r2 = norm2(x - c);
    if (r2 > near2) {
      // the integral runs over D only; cells with center outside do not enter
      if (!geometry::contains(d.support, c)) return;
      const cplx coeff = d.expr(c) - psi_ref;
      if (coeff == cplx(0.0)) return;
      const auto ke = kernels::laplace_kernel(x, c, dim);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) acc[a][b] += coeff * measure * ke.hess[a][b];
      return;
    }
    // refine cells near the evaluation point; sub-cells re-test the mask
    const int s_k = dim == 3 ? s : 1;
    for (int kk = 0; kk < s_k; ++kk)
      for (int jj = 0; jj < s; ++jj)
        for (int ii = 0; ii < s; ++ii) {
          Point y{c.x - 0.5 * g.h + (ii + 0.5) * sub_h, c.y - 0.5 * g.h + (jj + 0.5) * sub_h,
                  dim == 3 ? c.z - 0.5 * g.h + (kk + 0.5) * sub_h : 0.0};
          if (skip_x_cell && norm2(y - x) < 0.25 * sub_h * sub_h) continue;
          if (!geometry::contains(d.support, y)) continue;
          const cplx sub_coeff = d.expr(y) - psi_ref;
          if (sub_coeff == cplx(0.0)) continue;
          if (norm2(y - x) == 0.0) continue;
          const auto ke = kernels::laplace_kernel(x, y, dim);
          for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b) acc[a][b] += sub_coeff * sub_measure * ke.hess[a][b];
        }
  });
}

}  // namespace detail

/// Second derivatives of the potential at a point strictly inside or outside
/// the support. Interior points closer than 2h to the boundary are refused.
inline HessMatrix volpot_hessian(const DensityField& d, const Point& x, const HessianOptions& opts = {}) {
  const Grid& g = d.grid;
  const int dim = g.dim;
  const bool inside = geometry::contains(d.support, x);
  HessMatrix acc{};
  if (!inside) {
    detail::hessian_volume_sum(d, x, cplx(0.0), false, opts, acc);
    return acc;
  }
  if (geometry::boundary_distance(d.support, x) < 2.0 * g.h) {
    throw std::domain_error(
        "volpot_hessian: interior point closer than 2h to the boundary; the subtracted volume "
        "formula is not applicable there; refine the grid");
  }
  const cplx psi_x = d.expr(x);
  detail::hessian_volume_sum(d, x, psi_x, true, opts, acc);
  // boundary term, symmetrized over (i,j)
  const auto bnd = geometry::boundary_sample(d.support, opts.boundary_count);
  for (const auto& bp : bnd) {
    if (bp.weight == 0.0) continue;
    const auto ke = kernels::laplace_kernel(x, bp.p, dim);
    const std::array<double, 3> nu{bp.normal.x, bp.normal.y, bp.normal.z};
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        acc[a][b] -= psi_x * bp.weight * 0.5 * (ke.grad[b] * nu[a] + ke.grad[a] * nu[b]);
  }
  return acc;
}

// ---------------------------------------------------------------------------

struct JumpProbeOptions {
  double base_h{0.02};
  double eta_to_h{4.0};          // grid refined so that h <= eta / eta_to_h
  size_t max_cells{1ull << 26};  // probe grids are streamed, never materialized
  double boundary_oversample{12.0};
  double margin{0.15};
};

struct JumpProbeReport {
  Point x0;
  Point direction;
  std::vector<double> offsets;           // strictly decreasing
  std::vector<HessMatrix> jumps;         // per offset
  std::vector<double> grid_h;            // per offset
  double fitted_sup{0.0};
  bool divergence_flag{false};
};

/// Symmetric second-derivative jumps d2w(x0 + eta e) - d2w(x0 - eta e) across
/// a boundary point, with the grid refined per offset so that eta >= 4h.
inline JumpProbeReport symmetric_jump_probe(const Shape& shape,
                                            const std::function<cplx(const Point&)>& expr,
                                            const Point& x0, const Point& direction,
                                            std::span<const double> offsets,
                                            const JumpProbeOptions& opts = {}) {
  if (offsets.empty()) throw std::invalid_argument("symmetric_jump_probe: empty offset list");
  for (size_t i = 1; i < offsets.size(); ++i)
    if (!(offsets[i] < offsets[i - 1]) || !(offsets[i] > 0.0))
      throw std::invalid_argument("symmetric_jump_probe: offsets must be positive and strictly decreasing");
  if (geometry::boundary_distance(shape, x0) > 1e-9 * geometry::diameter(shape))
    throw std::invalid_argument("symmetric_jump_probe: x0 must lie on the boundary");
  const Point e = normalized(direction);

  JumpProbeReport rep;
  rep.x0 = x0;
  rep.direction = e;
  const int dim = shape.dim;
  const double perimeter_scale = 4.0 * geometry::diameter(shape);

  for (const double eta : offsets) {
    const double h = std::min(opts.base_h, eta / opts.eta_to_h);
    const Grid g = geometry::make_grid(shape, h, std::max(opts.margin, 2.5 * h), opts.max_cells);
    const Point xp = x0 + eta * e;
    const Point xm = x0 - eta * e;
    int ci, cj, ck;
    if (!g.locate(xp, ci, cj, ck) || !g.locate(xm, ci, cj, ck))
      throw std::invalid_argument("symmetric_jump_probe: probe line exits the grid");
    DensityField d{g, shape, expr, 1.0, 0.0};
    HessianOptions hopts;
    hopts.boundary_count =
        std::max(1024, static_cast<int>(std::ceil(perimeter_scale * opts.boundary_oversample / eta)));
    const HessMatrix hp = volpot_hessian(d, xp, hopts);
    const HessMatrix hm = volpot_hessian(d, xm, hopts);
    HessMatrix jump{};
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) jump[a][b] = hp[a][b] - hm[a][b];
    rep.offsets.push_back(eta);
    rep.jumps.push_back(jump);
    rep.grid_h.push_back(h);
  }

  // fitted sup and divergence flag: an entry diverges if its largest value
  // exceeds 3x its median and is attained at one of the two smallest offsets
  const size_t n = rep.offsets.size();
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      std::vector<double> mags(n);
      for (size_t t = 0; t < n; ++t) mags[t] = std::abs(rep.jumps[t][a][b]);
      rep.fitted_sup = std::max(rep.fitted_sup, *std::max_element(mags.begin(), mags.end()));
      if (n < 3) continue;
      std::vector<double> sorted = mags;
      std::sort(sorted.begin(), sorted.end());
      const double med = sorted[n / 2];
      const size_t argmax = std::distance(mags.begin(), std::max_element(mags.begin(), mags.end()));
      if (mags[argmax] > 3.0 * std::max(med, 1e-14) && argmax >= n - 2) rep.divergence_flag = true;
    }
  return rep;
}

inline nlohmann::json to_json(const JumpProbeReport& rep) {
  nlohmann::json j;
  j["point"] = {rep.x0.x, rep.x0.y, rep.x0.z};
  j["direction"] = {rep.direction.x, rep.direction.y, rep.direction.z};
  j["offsets"] = rep.offsets;
  j["grid_h"] = rep.grid_h;
  j["fitted_sup"] = rep.fitted_sup;
  j["divergence_flag"] = rep.divergence_flag;
  auto& arr = j["jumps"] = nlohmann::json::array();
  for (const auto& m : rep.jumps) {
    nlohmann::json entry = nlohmann::json::array();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (m[a][b] != cplx(0.0))
          entry.push_back({{"i", a}, {"j", b}, {"re", m[a][b].real()}, {"im", m[a][b].imag()}});
    arr.push_back(entry);
  }
  return j;
}

// ---------------------------------------------------------------------------

struct InequalityCheck {
  double lhs;
  double rhs;
  double gap;  // lhs - rhs, nonnegative up to 1e-12
};

/// Sharp algebraic lower bound controlling the scaled jump-integral
/// denominators: [1 + a^2 b^2/(1+a^2)]^2 - [2ab/(1+a^2)]^2 >= 4/(b^2+4),
/// with equality at a = +-1/sqrt(b^2+3).
inline InequalityCheck denominator_bound_check(double a, double b) {
  const double a2 = a * a;
  const double first = 1.0 + a2 * b * b / (1.0 + a2);
  const double second = 2.0 * a * b / (1.0 + a2);
  const double lhs = first * first - second * second;
  const double rhs = 4.0 / (b * b + 4.0);
  return {lhs, rhs, lhs - rhs};
}

// ---------------------------------------------------------------------------

/// Lipschitz graph through the origin given by piecewise-linear samples.
struct LipschitzGraph {
  std::vector<double> y;  // strictly increasing, spanning [-rho, rho]
  std::vector<double> f;  // f(y), with f interpolating 0 at y = 0
  double lipschitz_k{1.0};

  double eval(double t) const {
    const auto it = std::upper_bound(y.begin(), y.end(), t);
    if (it == y.begin()) return f.front();
    if (it == y.end()) return f.back();
    const size_t i = static_cast<size_t>(it - y.begin());
    const double s = (t - y[i - 1]) / (y[i] - y[i - 1]);
    return f[i - 1] + s * (f[i] - f[i - 1]);
  }
};

inline void validate_graph(const LipschitzGraph& g) {
  if (g.y.size() < 2 || g.y.size() != g.f.size())
    throw std::invalid_argument("jump_integral_bound_check: need matching sample arrays");
  for (size_t i = 1; i < g.y.size(); ++i) {
    if (!(g.y[i] > g.y[i - 1])) throw std::invalid_argument("jump_integral_bound_check: y not increasing");
    const double slope = (g.f[i] - g.f[i - 1]) / (g.y[i] - g.y[i - 1]);
    if (std::abs(slope) > g.lipschitz_k * (1.0 + 1e-9))
      throw std::invalid_argument("jump_integral_bound_check: slope exceeds declared Lipschitz constant");
  }
  if (std::abs(g.eval(0.0)) > 1e-12) throw std::invalid_argument("jump_integral_bound_check: f(0) must be 0");
}

/// Integrands of the two boundary-jump integrals at offset eta (m = 2):
/// tangential ~ |y (g_- - g_+)|, normal ~ |(f-eta) g_- - (f+eta) g_+| with
/// g_{+-}(y) = (y^2 + (f(y) -+ eta)^2)^{-m/2}.
inline std::pair<double, double> jump_integral_integrands(const LipschitzGraph& g, double eta, double t,
                                                          int m = 2) {
  const double f = g.eval(t);
  const double gm = std::pow(t * t + (f - eta) * (f - eta), -0.5 * m);
  const double gp = std::pow(t * t + (f + eta) * (f + eta), -0.5 * m);
  return {std::abs(t * (gm - gp)), std::abs((f - eta) * gm - (f + eta) * gp)};
}

struct JumpIntegralReport {
  std::vector<double> offsets;
  std::vector<double> tangential;  // per offset
  std::vector<double> normal;
  double sup_tangential{0.0};
  double sup_normal{0.0};
  bool growth_flag{false};  // successive increase beyond 25% as eta shrinks
};

/// Evaluates both boundary-jump integrals over [-rho, rho] for each offset and
/// checks that the values stay bounded as eta decreases (m = 2; m = 3 treats
/// the graph as radial and integrates over the disk of radius rho).
inline JumpIntegralReport jump_integral_bound_check(const LipschitzGraph& g,
                                                    std::span<const double> offsets, int m = 2,
                                                    double rho = 1.0) {
  validate_graph(g);
  if (offsets.empty()) throw std::invalid_argument("jump_integral_bound_check: empty offset list");
  JumpIntegralReport rep;
  const int cells = 20000;
  for (const double eta : offsets) {
    double ji = 0.0, jm = 0.0;
    if (m == 2) {
      // midpoint rule dense enough to resolve the eta-scale feature at 0
      const int nq = std::max(cells, static_cast<int>(std::ceil(40.0 * rho / eta)));
      const double dt = 2.0 * rho / nq;
      for (int i = 0; i < nq; ++i) {
        const double t = -rho + (i + 0.5) * dt;
        const auto [a, b] = jump_integral_integrands(g, eta, t, 2);
        ji += a * dt;
        jm += b * dt;
      }
    } else {
      const int nr = std::max(4000, static_cast<int>(std::ceil(20.0 * rho / eta)));
      const double dr = rho / nr;
      for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * dr;
        const auto [a, b] = jump_integral_integrands(g, eta, r, 3);
        // radial graph: angular integral contributes 2 pi r; tangential uses |y_j| ~ r |cos|
        ji += a * (4.0 * r) * dr;       // 2 pi r * mean|cos| = 2 pi r * (2/pi) = 4r
        jm += b * (2.0 * M_PI * r) * dr;
      }
    }
    rep.offsets.push_back(eta);
    rep.tangential.push_back(ji);
    rep.normal.push_back(jm);
  }
  rep.sup_tangential = *std::max_element(rep.tangential.begin(), rep.tangential.end());
  rep.sup_normal = *std::max_element(rep.normal.begin(), rep.normal.end());
  for (size_t i = 1; i < rep.offsets.size(); ++i) {
    if (rep.tangential[i] > 1.25 * std::max(rep.tangential[i - 1], 1e-14)) rep.growth_flag = true;
    if (rep.normal[i] > 1.25 * std::max(rep.normal[i - 1], 1e-14)) rep.growth_flag = true;
  }
  return rep;
}

}  // namespace helmlab::volpot
