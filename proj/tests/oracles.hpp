#pragma once

// Independent high-precision oracles used only by tests. The Bessel oracles
// avoid the library's series/asymptotic anchors: J comes from a long-double
// Miller sweep with sum normalization started far above the order, Y from its
// power series continued by long-double RK4 integration of the Bessel ODE,
// spherical j from a Miller sweep pinned to the closed-form j0.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracles {

inline constexpr long double kPi = 3.141592653589793238462643383279502884L;
inline constexpr long double kGamma = 0.577215664901532860606512090082402431L;

inline long double oracle_jn(int n, long double x) {
  if (x == 0.0L) return n == 0 ? 1.0L : 0.0L;
  int start = std::max<int>(n, static_cast<int>(x)) + 80;
  if (start % 2 == 1) ++start;
  long double fp = 0.0L, fc = 1e-32L, sum = 0.0L, result = 0.0L;
  for (int m = start; m >= 1; --m) {
    const long double fm = (2.0L * m / x) * fc - fp;
    fp = fc;
    fc = fm;
    if (m - 1 == n) result = fc;
    if ((m - 1) % 2 == 0) sum += (m - 1 == 0) ? fc : 2.0L * fc;
    if (std::abs(fc) > 1e260L) {
      fc *= 1e-260L;
      fp *= 1e-260L;
      sum *= 1e-260L;
      result *= 1e-260L;
    }
  }
  return result / sum;
}

namespace detail {

inline long double series_y0(long double x) {
  const long double q = 0.25L * x * x;
  long double term = 1.0L, sum = 0.0L, harmonic = 0.0L;
  for (int j = 1; j < 500; ++j) {
    term *= q / (static_cast<long double>(j) * j);
    harmonic += 1.0L / j;
    sum += (j % 2 == 1 ? term : -term) * harmonic;
    if (term * harmonic < 1e-28L * (1.0L + std::abs(sum))) break;
  }
  return (2.0L / kPi) * ((std::log(0.5L * x) + kGamma) * oracle_jn(0, x) + sum);
}

inline long double series_y1(long double x) {
  const long double q = 0.25L * x * x;
  long double term = 1.0L, sum = 1.0L, hj = 0.0L, hj1 = 1.0L;
  for (int j = 1; j < 500; ++j) {
    term *= -q / (static_cast<long double>(j) * (j + 1));
    hj += 1.0L / j;
    hj1 += 1.0L / (j + 1);
    sum += term * (hj + hj1);
    if (std::abs(term) * (hj + hj1) < 1e-28L * (1.0L + std::abs(sum))) break;
  }
  return (2.0L / kPi) * (std::log(0.5L * x) + kGamma) * oracle_jn(1, x) - 2.0L / (kPi * x) -
         (x / (2.0L * kPi)) * sum;
}

// RK4 continuation of y'' = -y'/x - (1 - n^2/x^2) y from x0 to x1.
inline void integrate_bessel_ode(int n, long double x0, long double x1, long double& y, long double& yp) {
  const int steps = static_cast<int>(std::ceil((x1 - x0) / 0.0005L));
  const long double h = (x1 - x0) / steps;
  auto f = [n](long double x, long double u, long double v, long double& du, long double& dv) {
    du = v;
    dv = -v / x - (1.0L - static_cast<long double>(n) * n / (x * x)) * u;
  };
  long double x = x0;
  for (int s = 0; s < steps; ++s) {
    long double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
    f(x, y, yp, k1u, k1v);
    f(x + 0.5L * h, y + 0.5L * h * k1u, yp + 0.5L * h * k1v, k2u, k2v);
    f(x + 0.5L * h, y + 0.5L * h * k2u, yp + 0.5L * h * k2v, k3u, k3v);
    f(x + h, y + h * k3u, yp + h * k3v, k4u, k4v);
    y += (h / 6.0L) * (k1u + 2.0L * k2u + 2.0L * k3u + k4u);
    yp += (h / 6.0L) * (k1v + 2.0L * k2v + 2.0L * k3v + k4v);
    x += h;
  }
}

}  // namespace detail

inline long double oracle_yn(int n, long double x) {
  const long double seed_limit = 15.0L;
  auto yn_small = [](int order, long double xx) {
    long double ym = detail::series_y0(xx), yc = detail::series_y1(xx);
    if (order == 0) return ym;
    for (int m = 1; m < order; ++m) {
      const long double yn = (2.0L * m / xx) * yc - ym;
      ym = yc;
      yc = yn;
    }
    return yc;
  };
  if (x <= seed_limit) return yn_small(n, x);
  long double y = yn_small(n, seed_limit);
  long double yp;
  if (n == 0) {
    yp = -yn_small(1, seed_limit);
  } else {
    yp = 0.5L * (yn_small(n - 1, seed_limit) - yn_small(n + 1, seed_limit));
  }
  detail::integrate_bessel_ode(n, seed_limit, x, y, yp);
  return y;
}

inline long double oracle_sph_jn(int n, long double x) {
  if (x == 0.0L) return n == 0 ? 1.0L : 0.0L;
  const long double j0 = std::sin(x) / x;
  if (n == 0) return j0;
  int start = std::max<int>(n, static_cast<int>(x)) + 80;
  long double fp = 0.0L, fc = 1e-32L, result = 0.0L;
  for (int m = start; m >= 1; --m) {
    const long double fm = ((2.0L * m + 1.0L) / x) * fc - fp;
    fp = fc;
    fc = fm;
    if (m - 1 == n) result = fc;
    if (std::abs(fc) > 1e260L) {
      fc *= 1e-260L;
      fp *= 1e-260L;
      result *= 1e-260L;
    }
  }
  return result * (j0 / fc);
}

/// Adaptive Simpson quadrature on [a,b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int depth = 24) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
          int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
      return left + right + (left + right - whole) / 15.0;
    }
    return rec(lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) +
           rec(mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
  };
  const double mid = 0.5 * (a + b);
  const double fa = f(a), fm = f(mid), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace oracles
