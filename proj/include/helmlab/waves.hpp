#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "helmlab/kernels.hpp"
#include "helmlab/point.hpp"

// Incident-wave families: plane waves, point sources, and Herglotz
// superpositions of plane waves over the unit circle with a trigonometric
// density, plus the leading-order stationary-phase approximation of the
// Herglotz integral at large wavenumber.

namespace helmlab::waves {

/// Periodic density on the circle stored as Fourier coefficients c_n,
/// n = min_order .. min_order + size - 1; phi(theta) = sum c_n e^{i n theta}.
struct FourierDensity {
  int min_order{0};
  std::vector<cplx> coeff{cplx(1.0, 0.0)};

  cplx eval(double theta) const {
    cplx s = 0.0;
    for (size_t t = 0; t < coeff.size(); ++t) {
      const double n = static_cast<double>(min_order + static_cast<int>(t));
      s += coeff[t] * std::exp(cplx(0.0, n * theta));
    }
    return s;
  }
  /// Upper bound on the C1 norm: sum (1 + |n|) |c_n|.
  double c1_norm() const {
    double s = 0.0;
    for (size_t t = 0; t < coeff.size(); ++t)
      s += (1.0 + std::abs(min_order + static_cast<int>(t))) * std::abs(coeff[t]);
    return s;
  }
  int max_abs_order() const {
    const int lo = std::abs(min_order);
    const int hi = std::abs(min_order + static_cast<int>(coeff.size()) - 1);
    return std::max(lo, hi);
  }
  double min_abs(int samples = 720) const {
    double m = std::numeric_limits<double>::max();
    for (int i = 0; i < samples; ++i) m = std::min(m, std::abs(eval(2.0 * M_PI * i / samples)));
    return m;
  }
  static FourierDensity constant(cplx c) { return {0, {c}}; }
  static FourierDensity harmonic(int order, cplx c = cplx(1.0, 0.0)) { return {order, {c}}; }
};

struct IncidentWave {
  enum class Kind { Plane, PointSource, Herglotz } kind{Kind::Plane};
  double k{1.0};
  Point direction{1.0, 0.0, 0.0};  // plane
  Point source{};                  // point source location, outside the scatterer
  FourierDensity density;          // herglotz (2D)
  int dim{2};
};

inline IncidentWave plane_wave(double k, const Point& direction, int dim = 2) {
  if (!(k > 0.0)) throw std::invalid_argument("plane_wave: k must be positive");
  IncidentWave w;
  w.kind = IncidentWave::Kind::Plane;
  w.k = k;
  w.direction = normalized(direction);
  w.dim = dim;
  return w;
}

inline IncidentWave point_source(double k, const Point& location, int dim = 2) {
  if (!(k > 0.0)) throw std::invalid_argument("point_source: k must be positive");
  IncidentWave w;
  w.kind = IncidentWave::Kind::PointSource;
  w.k = k;
  w.source = location;
  w.dim = dim;
  return w;
}

inline IncidentWave herglotz_wave(double k, FourierDensity density) {
  if (!(k > 0.0)) throw std::invalid_argument("herglotz_wave: k must be positive");
  IncidentWave w;
  w.kind = IncidentWave::Kind::Herglotz;
  w.k = k;
  w.density = std::move(density);
  w.dim = 2;
  return w;
}

/// Trapezoidal node count for the Herglotz circle integral; spectrally
/// convergent once the count passes ~ k|x| plus the density bandwidth.
inline int herglotz_quadrature_count(double k, double r, int density_order) {
  const double base = std::max(64.0, 8.0 * k * r);
  return static_cast<int>(std::ceil(base)) + 8 * (density_order + 1);
}

inline cplx eval_incident(const IncidentWave& w, const Point& x) {
  switch (w.kind) {
    case IncidentWave::Kind::Plane:
      return std::exp(cplx(0.0, w.k * dot(w.direction, x)));
    case IncidentWave::Kind::PointSource: {
      if (norm(x - w.source) == 0.0)
        throw std::domain_error("eval_incident: point source evaluated at its location");
      return kernels::helmholtz_kernel(x, w.source, w.k, w.dim).value;
    }
    case IncidentWave::Kind::Herglotz: {
      const double r = std::hypot(x.x, x.y);
      const int nq = herglotz_quadrature_count(w.k, r, w.density.max_abs_order());
      cplx acc = 0.0;
      for (int i = 0; i < nq; ++i) {
        const double theta = 2.0 * M_PI * i / nq;
        const double phase = w.k * (x.x * std::cos(theta) + x.y * std::sin(theta));
        acc += w.density.eval(theta) * std::exp(cplx(0.0, phase));
      }
      return acc / static_cast<double>(nq);  // (1/2pi) integral, trapezoid on the circle
    }
  }
  throw std::logic_error("unreachable");
}

/// Max |Delta_h v + k^2 v| over the sample points with the 5/7-point stencil.
inline double verify_helmholtz(const std::function<cplx(const Point&)>& field, double k,
                               std::span<const Point> points, double step, int dim = 2) {
  double worst = 0.0;
  for (const Point& x : points) {
    cplx lap = 0.0;
    for (int a = 0; a < dim; ++a) {
      Point e{};
      (a == 0 ? e.x : (a == 1 ? e.y : e.z)) = step;
      lap += field(x + e) - 2.0 * field(x) + field(x - e);
    }
    lap /= step * step;
    worst = std::max(worst, std::abs(lap + k * k * field(x)));
  }
  return worst;
}

inline double verify_helmholtz(const IncidentWave& w, std::span<const Point> points, double step) {
  return verify_helmholtz([&](const Point& x) { return eval_incident(w, x); }, w.k, points, step, w.dim);
}

struct StationaryPhaseResult {
  cplx approx;
  cplx direct;
  double residual;
  double k;
  double z_abs;
  double theta_z;
};

/// Leading-order two-point stationary-phase value of the Herglotz integral at
/// x = z against the converged trapezoidal quadrature (2D).
inline StationaryPhaseResult stationary_phase_farfield(const FourierDensity& phi, double k,
                                                       const Point& z) {
  const double r = std::hypot(z.x, z.y);
  if (r == 0.0) throw std::domain_error("stationary_phase_farfield: z must be nonzero");
  const double theta_z = std::atan2(z.y, z.x);
  const double amp = std::sqrt(2.0 * M_PI / (k * r)) / (2.0 * M_PI);
  const cplx approx = amp * (phi.eval(theta_z) * std::exp(cplx(0.0, k * r - 0.25 * M_PI)) +
                             phi.eval(theta_z + M_PI) * std::exp(cplx(0.0, -(k * r - 0.25 * M_PI))));
  const cplx direct = eval_incident(herglotz_wave(k, phi), z);
  return {approx, direct, std::abs(approx - direct), k, r, theta_z};
}

/// Max over the samples of |phi(theta_z) e^{2ik|z|} + i phi(theta_z + pi)|,
/// the combination whose decay along a wavenumber sequence forces the density
/// to vanish at antipodal directions.
inline double nonscattering_pair_residual(const FourierDensity& phi, double k,
                                          std::span<const Point> zs) {
  double worst = 0.0;
  for (const Point& z : zs) {
    const double r = std::hypot(z.x, z.y);
    if (r == 0.0) throw std::domain_error("nonscattering_pair_residual: z must be nonzero");
    const double theta_z = std::atan2(z.y, z.x);
    const cplx v = phi.eval(theta_z) * std::exp(cplx(0.0, 2.0 * k * r)) +
                   cplx(0.0, 1.0) * phi.eval(theta_z + M_PI);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const FourierDensity& d) {
  nlohmann::json j;
  j["min_order"] = d.min_order;
  auto& arr = j["coefficients"] = nlohmann::json::array();
  for (const cplx& c : d.coeff) arr.push_back({c.real(), c.imag()});
  return j;
}

inline FourierDensity density_from_json(const nlohmann::json& j) {
  FourierDensity d;
  d.min_order = j.at("min_order");
  d.coeff.clear();
  for (const auto& c : j.at("coefficients")) d.coeff.push_back({c.at(0), c.at(1)});
  if (d.coeff.empty()) throw std::invalid_argument("density_from_json: empty coefficient list");
  return d;
}

inline nlohmann::json to_json(const IncidentWave& w) {
  nlohmann::json j;
  j["k"] = w.k;
  switch (w.kind) {
    case IncidentWave::Kind::Plane:
      j["type"] = "plane";
      j["direction"] = {w.direction.x, w.direction.y, w.direction.z};
      break;
    case IncidentWave::Kind::PointSource:
      j["type"] = "point_source";
      j["location"] = {w.source.x, w.source.y, w.source.z};
      break;
    case IncidentWave::Kind::Herglotz:
      j["type"] = "herglotz";
      j["density"] = to_json(w.density);
      break;
  }
  return j;
}

inline IncidentWave incident_from_json(const nlohmann::json& j, int dim = 2) {
  const std::string type = j.at("type").get<std::string>();
  const double k = j.at("k");
  if (type == "plane") {
    const auto d = j.at("direction");
    return plane_wave(k, {d.at(0), d.at(1), d.size() > 2 ? d.at(2).get<double>() : 0.0}, dim);
  }
  if (type == "point_source") {
    const auto p = j.at("location");
    return point_source(k, {p.at(0), p.at(1), p.size() > 2 ? p.at(2).get<double>() : 0.0}, dim);
  }
  if (type == "herglotz") return herglotz_wave(k, density_from_json(j.at("density")));
  throw std::invalid_argument("incident_from_json: unknown type " + type);
}

}  // namespace helmlab::waves
