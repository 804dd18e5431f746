#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "helmlab/point.hpp"
#include "helmlab/special_functions.hpp"

// Fundamental solutions of the Laplace and Helmholtz operators in 2D/3D with
// first and second derivatives in the source-free convention
//   -Delta Phi = delta,   (Delta + k^2) Phi_k = -delta.

namespace helmlab::kernels {

struct KernelEval {
  cplx value{};
  std::array<cplx, 3> grad{};                  // d/dx_j
  std::array<std::array<cplx, 3>, 3> hess{};   // d^2/dx_i dx_j, symmetric
  double r{0.0};
};

namespace detail {

// Hessian of a radial function F(r) evaluated at displacement d = x - y:
//   F''(r) d_i d_j / r^2 + F'(r) (delta_ij / r - d_i d_j / r^3).
inline void radial_hessian(KernelEval& out, const Point& d, int dim, cplx dF, cplx d2F) {
  const double r = out.r;
  const std::array<double, 3> dc{d.x, d.y, d.z};
  for (int i = 0; i < dim; ++i) {
    out.grad[i] = dF * (dc[i] / r);
    for (int j = 0; j < dim; ++j) {
      cplx v = d2F * (dc[i] * dc[j] / (r * r)) - dF * (dc[i] * dc[j] / (r * r * r));
      if (i == j) v += dF / r;
      out.hess[i][j] = v;
    }
  }
}

}  // namespace detail

/// Laplace fundamental solution: 1/(4 pi r) in 3D, (1/2pi) log(1/r) in 2D.
inline KernelEval laplace_kernel(const Point& x, const Point& y, int dim) {
  const Point d = x - y;
  const double r = norm(d);
  if (r == 0.0) throw std::domain_error("laplace_kernel: coincident points");
  KernelEval out;
  out.r = r;
  if (dim == 3) {
    const double F = 1.0 / (4.0 * M_PI * r);
    out.value = F;
    detail::radial_hessian(out, d, 3, -F / r, 2.0 * F / (r * r));
  } else if (dim == 2) {
    out.value = std::log(1.0 / r) / (2.0 * M_PI);
    const double dF = -1.0 / (2.0 * M_PI * r);
    detail::radial_hessian(out, d, 2, dF, -dF / r);
  } else {
    throw std::invalid_argument("laplace_kernel: dim must be 2 or 3");
  }
  return out;
}

/// Helmholtz fundamental solution: e^{ikr}/(4 pi r) in 3D, (i/4) H0^(1)(kr) in 2D.
inline KernelEval helmholtz_kernel(const Point& x, const Point& y, double k, int dim) {
  if (!(k > 0.0)) throw std::domain_error("helmholtz_kernel: k must be positive");
  const Point d = x - y;
  const double r = norm(d);
  if (r == 0.0) throw std::domain_error("helmholtz_kernel: coincident points");
  KernelEval out;
  out.r = r;
  if (dim == 3) {
    const cplx e = std::exp(cplx(0.0, k * r));
    const double c = 1.0 / (4.0 * M_PI);
    out.value = c * e / r;
    const cplx dF = c * e * (cplx(0.0, k) * r - 1.0) / (r * r);
    const cplx d2F = c * e * (cplx(-k * k, 0.0) * r * r - 2.0 * cplx(0.0, k) * r + 2.0) / (r * r * r);
    detail::radial_hessian(out, d, 3, dF, d2F);
  } else if (dim == 2) {
    const cplx i4(0.0, 0.25);
    const cplx h0 = sf::hankel1(0, k * r);
    const cplx h1 = sf::hankel1(1, k * r);
    out.value = i4 * h0;
    const cplx dF = -i4 * k * h1;
    const cplx d2F = -i4 * k * k * (h0 - h1 / (k * r));
    detail::radial_hessian(out, d, 2, dF, d2F);
  } else {
    throw std::invalid_argument("helmholtz_kernel: dim must be 2 or 3");
  }
  return out;
}

/// Integral of the Laplace kernel over the disk/ball of the same measure as a
/// grid cell of spacing h, centered at the singularity.
inline double laplace_selfcell_integral(double h, int dim) {
  if (dim == 3) {
    const double rho = h * std::cbrt(3.0 / (4.0 * M_PI));
    return 0.5 * rho * rho;
  }
  const double rho = h / std::sqrt(M_PI);
  return 0.5 * rho * rho * std::log(1.0 / rho) + 0.25 * rho * rho;
}

/// Same for the Helmholtz kernel. Small k*rho switches to series forms that
/// avoid the 1/k^2 cancellation of the closed expressions.
inline cplx helmholtz_selfcell_integral(double k, double h, int dim) {
  if (dim == 3) {
    const double rho = h * std::cbrt(3.0 / (4.0 * M_PI));
    const double z = k * rho;
    if (z < 0.5) {
      // rho^2 sum_m i^m (m+1)/(m+2)! z^m
      cplx sum = 0.0, zp = 1.0;
      double fact = 2.0;  // (m+2)! running
      for (int m = 0; m < 30; ++m) {
        sum += zp * ((m + 1.0) / fact);
        zp *= cplx(0.0, z);
        fact *= (m + 3.0);
        if (std::abs(zp) / fact < 1e-20) break;
      }
      return rho * rho * sum;
    }
    return (std::exp(cplx(0.0, z)) * (1.0 - cplx(0.0, z)) - 1.0) / (k * k);
  }
  const double rho = h / std::sqrt(M_PI);
  const double z = k * rho;
  if (z < 0.5) {
    // (i pi rho/2k) J1 - (rho/k)(log(z/2)+gamma) J1 + (rho^2/4) S(z), the
    // 1/k^2 pole of -(pi rho/2k) Y1 cancelled symbolically
    const double gamma = 0.57721566490153286061;
    const double j1_over_z = [&] {
      double term = 0.5, sum = 0.5;
      const double q = 0.25 * z * z;
      for (int j = 1; j < 40; ++j) {
        term *= -q / (j * (j + 1.0));
        sum += term;
        if (std::abs(term) < 1e-20) break;
      }
      return sum;  // J1(z)/z
    }();
    double s = 1.0, term = 1.0, hj = 0.0, hj1 = 1.0;
    const double q = 0.25 * z * z;
    for (int j = 1; j < 40; ++j) {
      term *= -q / (j * (j + 1.0));
      hj += 1.0 / j;
      hj1 += 1.0 / (j + 1.0);
      s += term * (hj + hj1);
      if (std::abs(term) * (hj + hj1) < 1e-20) break;
    }
    const double rr = rho * rho;
    return cplx(0.0, 0.5 * M_PI * rr) * j1_over_z - rr * (std::log(0.5 * z) + gamma) * j1_over_z +
           0.25 * rr * s;
  }
  return cplx(0.0, M_PI * rho / (2.0 * k)) * sf::hankel1(1, z) - 1.0 / (k * k);
}

struct BoundsReport {
  double fitted_c_gradient{0.0};  // sup |grad Phi| r^{m-1}
  double fitted_c_hessian{0.0};   // sup |d2 Phi| r^m (entrywise)
  bool gradient_pass{false};
  bool hessian_pass{false};
  size_t samples{0};
};

/// Fits the smallest constants in |grad Phi| <= C/r^{m-1}, |d2 Phi| <= C/r^m
/// over the supplied (x, y) pairs and reports pass/fail against `cap`.
inline BoundsReport kernel_bounds_check(std::span<const std::pair<Point, Point>> pairs, int dim,
                                        double cap = 10.0) {
  if (pairs.empty()) throw std::invalid_argument("kernel_bounds_check: empty sample list");
  BoundsReport rep;
  rep.samples = pairs.size();
  for (const auto& [x, y] : pairs) {
    const KernelEval ke = laplace_kernel(x, y, dim);
    double gmag = 0.0;
    for (int i = 0; i < dim; ++i) gmag = std::max(gmag, std::abs(ke.grad[i]));
    double hmag = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) hmag = std::max(hmag, std::abs(ke.hess[i][j]));
    rep.fitted_c_gradient = std::max(rep.fitted_c_gradient, gmag * std::pow(ke.r, dim - 1));
    rep.fitted_c_hessian = std::max(rep.fitted_c_hessian, hmag * std::pow(ke.r, dim));
  }
  rep.gradient_pass = rep.fitted_c_gradient <= cap;
  rep.hessian_pass = rep.fitted_c_hessian <= cap;
  return rep;
}

}  // namespace helmlab::kernels
