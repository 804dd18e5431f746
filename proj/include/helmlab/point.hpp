#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace helmlab {

using cplx = std::complex<double>;

/// Cartesian point in 2 or 3 dimensions; z is ignored in 2D.
struct Point {
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

inline Point operator+(const Point& a, const Point& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point operator-(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point operator*(double s, const Point& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Point operator*(const Point& a, double s) { return s * a; }
inline Point operator-(const Point& a) { return {-a.x, -a.y, -a.z}; }

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const Point& a) { return dot(a, a); }

inline Point normalized(const Point& a) {
  const double n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

/// Rotate about the origin in the xy-plane.
inline Point rotate2d(const Point& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

inline double component(const Point& p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

inline Point with_component(Point p, int axis, double v) {
  (axis == 0 ? p.x : (axis == 1 ? p.y : p.z)) = v;
  return p;
}

}  // namespace helmlab
