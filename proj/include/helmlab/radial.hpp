#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "helmlab/special_functions.hpp"
#include "helmlab/waves.hpp"

// Spherically symmetric media: the interior eigenpair of angular order l
// consists of a free solution ~ B_l(kr) and an interior solution ~ B_l(k sqrt(n) r)
// sharing Cauchy data on r = R. Eliminating the amplitude gives the real
// determinant
//   d_l(k) = B_l(k sqrt(n) R) k B_l'(k R) - B_l(k R) k sqrt(n) B_l'(k sqrt(n) R)
// with B = J (2D) or the spherical j (3D); its positive roots are the
// wavenumbers at which the order-l Herglotz wave is not scattered. The
// formula's authority is the cross-check against the full volume-integral
// solver.

namespace helmlab::radial {

struct RadialMedium {
  int dim{2};
  double radius{1.0};
  double n{4.0};
};

inline void validate(const RadialMedium& m) {
  if (m.dim != 2 && m.dim != 3) throw std::invalid_argument("RadialMedium: dim must be 2 or 3");
  if (!(m.radius > 0.0)) throw std::invalid_argument("RadialMedium: radius must be positive");
  if (!(m.n > 0.0) || std::abs(m.n - 1.0) < 1e-6)
    throw std::invalid_argument("RadialMedium: refractive index must be positive and away from 1");
}

inline double te_determinant(const RadialMedium& m, int ell, double k) {
  if (!(k > 0.0)) throw std::domain_error("te_determinant: k must be positive");
  const double root_n = std::sqrt(m.n);
  const double xo = k * m.radius;          // outer argument
  const double xi = k * root_n * m.radius; // interior argument
  if (m.dim == 2) {
    return sf::bessel_j(ell, xi) * k * sf::bessel_j_prime(ell, xo) -
           sf::bessel_j(ell, xo) * k * root_n * sf::bessel_j_prime(ell, xi);
  }
  return sf::sph_bessel_j(ell, xi) * k * sf::sph_bessel_j_prime(ell, xo) -
         sf::sph_bessel_j(ell, xo) * k * root_n * sf::sph_bessel_j_prime(ell, xi);
}

struct TransmissionRoot {
  int ell{0};
  double k{0.0};
  double residual{0.0};     // |d_l| at the polished root
  double bracket_lo{0.0};
  double bracket_hi{0.0};
};

struct TransmissionSpectrum {
  std::vector<TransmissionRoot> roots;  // sorted by k, then by order
  double k_min{0.0}, k_max{0.0};
};

/// Scans [k_min, k_max] per order, brackets sign changes and polishes each by
/// bisection. The scan step must be fine enough to separate neighboring roots.
inline TransmissionSpectrum te_spectrum(const RadialMedium& m, int ell_max, double k_min, double k_max,
                                        double step = 0.0) {
  validate(m);
  if (!(k_max > k_min) || !(k_min > 0.0)) throw std::invalid_argument("te_spectrum: empty range");
  const double max_step = M_PI / (4.0 * m.radius * std::max(1.0, std::sqrt(m.n)));
  if (step <= 0.0) step = max_step / 2.0;
  if (step > max_step) throw std::invalid_argument("te_spectrum: scan step too coarse for the root spacing");

  TransmissionSpectrum spec;
  spec.k_min = k_min;
  spec.k_max = k_max;
  for (int ell = 0; ell <= ell_max; ++ell) {
    double a = k_min;
    double da = te_determinant(m, ell, a);
    for (double b = k_min + step; a < k_max; b = std::min(b + step, k_max)) {
      b = std::min(b, k_max);
      const double db = te_determinant(m, ell, b);
      if ((da < 0.0) != (db < 0.0)) {
        double lo = a, hi = b, dlo = da;
        const double scale = std::max(std::abs(da), std::abs(db));
        for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double dm = te_determinant(m, ell, mid);
          if ((dm < 0.0) == (dlo < 0.0)) {
            lo = mid;
            dlo = dm;
          } else {
            hi = mid;
          }
        }
        const double kr = 0.5 * (lo + hi);
        spec.roots.push_back({ell, kr, std::abs(te_determinant(m, ell, kr)), a, b});
        if (!(spec.roots.back().residual <= 1e-10 * std::max(scale, 1.0)))
          throw std::runtime_error("te_spectrum: bisection failed to polish a root");
      }
      a = b;
      da = db;
      if (b >= k_max) break;
    }
  }
  std::sort(spec.roots.begin(), spec.roots.end(), [](const auto& x, const auto& y) {
    return x.k != y.k ? x.k < y.k : x.ell < y.ell;
  });
  return spec;
}

/// First `count` roots of a single order, in increasing k.
inline std::vector<TransmissionRoot> first_roots(const RadialMedium& m, int ell, int count,
                                                 double k_min = 0.3, double k_max = 40.0) {
  const auto spec = te_spectrum(m, ell, k_min, k_max);
  std::vector<TransmissionRoot> out;
  for (const auto& r : spec.roots)
    if (r.ell == ell) {
      out.push_back(r);
      if (static_cast<int>(out.size()) == count) break;
    }
  if (static_cast<int>(out.size()) < count)
    throw std::runtime_error("first_roots: search window holds fewer roots than requested");
  return out;
}

/// The order-l Herglotz wave whose transform is proportional to the free part
/// of the radial eigenpair; valid only at spectrum roots (2D).
inline waves::IncidentWave eigen_incident(const RadialMedium& m, int ell, double k_root) {
  validate(m);
  if (m.dim != 2) throw std::invalid_argument("eigen_incident: Herglotz densities are 2D");
  const double d = te_determinant(m, ell, k_root);
  // reject wavenumbers that are not roots; scale against the neighboring
  // determinant magnitude so the test is dimensionless
  const double scale = std::abs(te_determinant(m, ell, k_root * 1.05)) +
                       std::abs(te_determinant(m, ell, k_root * 0.95)) + 1e-30;
  if (std::abs(d) > 1e-6 * scale)
    throw std::invalid_argument("eigen_incident: k is not a root of the order-" + std::to_string(ell) +
                                " determinant");
  return waves::herglotz_wave(k_root, waves::FourierDensity::harmonic(ell));
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const TransmissionSpectrum& s) {
  nlohmann::json j;
  j["k_min"] = s.k_min;
  j["k_max"] = s.k_max;
  auto& arr = j["roots"] = nlohmann::json::array();
  for (const auto& r : s.roots)
    arr.push_back({{"ell", r.ell},
                   {"k", r.k},
                   {"residual", r.residual},
                   {"bracket", {r.bracket_lo, r.bracket_hi}}});
  return j;
}

}  // namespace helmlab::radial
