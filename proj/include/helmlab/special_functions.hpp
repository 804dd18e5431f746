#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

// Cylindrical Bessel functions J_n, Y_n, Hankel H_n^(1) and spherical j_n for
// real nonnegative argument, built from power series near the origin, the
// large-argument Hankel expansion beyond the crossover, and three-term
// recurrences in the order (upward where the function grows, Miller's
// normalized downward sweep where it decays). Internals run in long double.

namespace helmlab::sf {

namespace detail {

inline constexpr long double kPiL = 3.141592653589793238462643383279502884L;
inline constexpr long double kEulerGammaL = 0.577215664901532860606512090082402431L;

// Crossover between the power series and the large-argument expansion.
// Both branches agree to ~1e-13 relative in a neighborhood of this value.
inline constexpr long double kAsymptoticCrossover = 17.25L;

inline long double series_j0(long double x) {
  const long double q = 0.25L * x * x;
  long double term = 1.0L, sum = 1.0L;
  for (int j = 1; j < 400; ++j) {
    term *= -q / (static_cast<long double>(j) * j);
    sum += term;
    if (std::abs(term) < 1e-24L * (1.0L + std::abs(sum))) break;
  }
  return sum;
}

inline long double series_j1(long double x) {
  const long double q = 0.25L * x * x;
  long double term = 0.5L * x, sum = term;
  for (int j = 1; j < 400; ++j) {
    term *= -q / (static_cast<long double>(j) * (j + 1));
    sum += term;
    if (std::abs(term) < 1e-24L * (1.0L + std::abs(sum))) break;
  }
  return sum;
}

inline long double series_y0(long double x) {
  const long double q = 0.25L * x * x;
  // (2/pi)(log(x/2)+gamma) J0 + (2/pi) sum_{j>=1} (-1)^{j+1} H_j q^j/(j!)^2
  long double term = 1.0L, sum = 0.0L, harmonic = 0.0L;
  for (int j = 1; j < 400; ++j) {
    term *= q / (static_cast<long double>(j) * j);
    harmonic += 1.0L / j;
    const long double contrib = (j % 2 == 1 ? term : -term) * harmonic;
    sum += contrib;
    if (std::abs(term) * harmonic < 1e-24L * (1.0L + std::abs(sum))) break;
  }
  return (2.0L / kPiL) * ((std::log(0.5L * x) + kEulerGammaL) * series_j0(x) + sum);
}

inline long double series_y1(long double x) {
  const long double q = 0.25L * x * x;
  // (2/pi)(log(x/2)+gamma) J1 - 2/(pi x) - (x/2pi) sum (-1)^j (H_j+H_{j+1}) q^j/(j!(j+1)!)
  long double term = 1.0L, sum = 1.0L;  // j=0: H_0 + H_1 = 1
  long double hj = 0.0L, hj1 = 1.0L;
  for (int j = 1; j < 400; ++j) {
    term *= -q / (static_cast<long double>(j) * (j + 1));
    hj += 1.0L / j;
    hj1 += 1.0L / (j + 1);
    const long double contrib = term * (hj + hj1);
    sum += contrib;
    if (std::abs(contrib) < 1e-24L * (1.0L + std::abs(sum))) break;
  }
  return (2.0L / kPiL) * (std::log(0.5L * x) + kEulerGammaL) * series_j1(x) - 2.0L / (kPiL * x) -
         (x / (2.0L * kPiL)) * sum;
}

// H_nu^(1)(x) ~ sqrt(2/(pi x)) e^{i(x - nu pi/2 - pi/4)} sum_k i^k a_k(nu)/x^k,
// summed to the smallest term.
inline std::complex<long double> asymptotic_h1(int nu, long double x) {
  const long double mu = 4.0L * nu * nu;
  std::complex<long double> term(1.0L, 0.0L), sum(1.0L, 0.0L);
  long double prev_mag = 1.0L;
  for (int k = 1; k < 60; ++k) {
    const long double odd = 2.0L * k - 1.0L;
    term *= std::complex<long double>(0.0L, 1.0L) * ((mu - odd * odd) / (8.0L * k * x));
    const long double mag = std::abs(term);
    if (mag > prev_mag) break;  // divergent tail reached
    sum += term;
    prev_mag = mag;
    if (mag < 1e-24L) break;
  }
  const long double chi = x - 0.5L * nu * kPiL - 0.25L * kPiL;
  const std::complex<long double> phase(std::cos(chi), std::sin(chi));
  return std::sqrt(2.0L / (kPiL * x)) * phase * sum;
}

struct J0J1Y0Y1 {
  long double j0, j1, y0, y1;
};

inline J0J1Y0Y1 base_values(long double x) {
  if (x < kAsymptoticCrossover) {
    return {series_j0(x), series_j1(x), series_y0(x), series_y1(x)};
  }
  const auto h0 = asymptotic_h1(0, x);
  const auto h1 = asymptotic_h1(1, x);
  return {h0.real(), h1.real(), h0.imag(), h1.imag()};
}

// Miller downward recurrence; returns J_0..J_n normalized by J0 + 2*sum J_{2k} = 1.
inline std::vector<long double> miller_jn(int n, long double x) {
  int start = std::max(n, static_cast<int>(x)) + 40;
  if (start % 2 == 1) ++start;
  long double fp = 0.0L, fc = 1e-30L, sum = 0.0L;
  std::vector<long double> out(static_cast<size_t>(n) + 1, 0.0L);
  for (int m = start; m >= 1; --m) {
    long double fm = (2.0L * m / x) * fc - fp;
    fp = fc;
    fc = fm;
    if (m - 1 <= n) out[static_cast<size_t>(m - 1)] = fc;
    if ((m - 1) % 2 == 0) sum += (m - 1 == 0) ? fc : 2.0L * fc;
    if (std::abs(fc) > 1e280L) {
      fc *= 1e-280L;
      fp *= 1e-280L;
      sum *= 1e-280L;
      for (auto& v : out) v *= 1e-280L;
    }
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace detail

/// Bessel function of the first kind J_n(x), integer order n >= 0, x >= 0.
inline double bessel_j(int n, double x) {
  if (n < 0) throw std::domain_error("bessel_j: order must be >= 0");
  if (x < 0.0) throw std::domain_error("bessel_j: argument must be >= 0");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  const long double xl = x;
  const auto base = detail::base_values(xl);
  if (n == 0) return static_cast<double>(base.j0);
  if (n == 1) return static_cast<double>(base.j1);
  if (xl >= static_cast<long double>(n)) {
    long double jm = base.j0, jc = base.j1;
    for (int m = 1; m < n; ++m) {
      const long double jn = (2.0L * m / xl) * jc - jm;
      jm = jc;
      jc = jn;
    }
    return static_cast<double>(jc);
  }
  return static_cast<double>(detail::miller_jn(n, xl).back());
}

/// Bessel function of the second kind Y_n(x), integer order n >= 0, x > 0.
inline double bessel_y(int n, double x) {
  if (n < 0) throw std::domain_error("bessel_y: order must be >= 0");
  if (!(x > 0.0)) throw std::domain_error("bessel_y: argument must be > 0");
  const long double xl = x;
  const auto base = detail::base_values(xl);
  if (n == 0) return static_cast<double>(base.y0);
  if (n == 1) return static_cast<double>(base.y1);
  long double ym = base.y0, yc = base.y1;
  for (int m = 1; m < n; ++m) {
    const long double yn = (2.0L * m / xl) * yc - ym;
    ym = yc;
    yc = yn;
  }
  return static_cast<double>(yc);
}

/// Hankel function of the first kind H_n^(1)(x) = J_n(x) + i Y_n(x).
inline std::complex<double> hankel1(int n, double x) {
  return {bessel_j(n, x), bessel_y(n, x)};
}

/// Derivative J_n'(x).
inline double bessel_j_prime(int n, double x) {
  if (n == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x));
}

/// Derivative Y_n'(x).
inline double bessel_y_prime(int n, double x) {
  if (n == 0) return -bessel_y(1, x);
  return 0.5 * (bessel_y(n - 1, x) - bessel_y(n + 1, x));
}

inline std::complex<double> hankel1_prime(int n, double x) {
  return {bessel_j_prime(n, x), bessel_y_prime(n, x)};
}

namespace detail {

inline long double sph_j0(long double x) {
  if (std::abs(x) < 1e-3L) {
    const long double x2 = x * x;
    return 1.0L - x2 / 6.0L + x2 * x2 / 120.0L - x2 * x2 * x2 / 5040.0L;
  }
  return std::sin(x) / x;
}

inline long double sph_j1(long double x) {
  if (std::abs(x) < 1e-3L) {
    const long double x2 = x * x;
    return x / 3.0L - x * x2 / 30.0L + x * x2 * x2 / 840.0L;
  }
  return std::sin(x) / (x * x) - std::cos(x) / x;
}

}  // namespace detail

/// Spherical Bessel function j_n(x), integer order n >= 0, x >= 0.
inline double sph_bessel_j(int n, double x) {
  if (n < 0) throw std::domain_error("sph_bessel_j: order must be >= 0");
  if (x < 0.0) throw std::domain_error("sph_bessel_j: argument must be >= 0");
  const long double xl = x;
  if (n == 0) return static_cast<double>(detail::sph_j0(xl));
  if (x == 0.0) return 0.0;
  if (n == 1) return static_cast<double>(detail::sph_j1(xl));
  if (xl >= static_cast<long double>(n)) {
    long double jm = detail::sph_j0(xl), jc = detail::sph_j1(xl);
    for (int m = 1; m < n; ++m) {
      const long double jn = ((2.0L * m + 1.0L) / xl) * jc - jm;
      jm = jc;
      jc = jn;
    }
    return static_cast<double>(jc);
  }
  // Downward sweep normalized against the closed-form j0.
  int start = std::max(n, static_cast<int>(xl)) + 40;
  long double fp = 0.0L, fc = 1e-30L, result = 0.0L;
  for (int m = start; m >= 1; --m) {
    const long double fm = ((2.0L * m + 1.0L) / xl) * fc - fp;
    fp = fc;
    fc = fm;
    if (m - 1 == n) result = fc;
    if (std::abs(fc) > 1e280L) {
      fc *= 1e-280L;
      fp *= 1e-280L;
      result *= 1e-280L;
    }
  }
  return static_cast<double>(result * (detail::sph_j0(xl) / fc));
}

/// Derivative j_n'(x).
inline double sph_bessel_j_prime(int n, double x) {
  if (n == 0) return -sph_bessel_j(1, x);
  return sph_bessel_j(n - 1, x) - ((n + 1.0) / x) * sph_bessel_j(n, x);
}

}  // namespace helmlab::sf
