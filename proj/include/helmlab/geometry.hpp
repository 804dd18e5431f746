#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "helmlab/point.hpp"

// Shape descriptors for the inhomogeneity, indicator and refractive-index
// evaluation, boundary sampling with outward normals, and uniform grids.

namespace helmlab::geometry {

enum class ShapeKind { Disk, Ellipse, Polygon, Ball };

struct BBox {
  Point lo, hi;
};

struct Shape {
  ShapeKind kind{ShapeKind::Disk};
  int dim{2};
  Point center{};                       // disk / ellipse / ball
  double radius{1.0};                   // disk / ball
  double semi_a{1.0}, semi_b{1.0};      // ellipse
  double rotation{0.0};                 // ellipse, radians
  std::vector<Point> vertices;          // polygon, counter-clockwise

  static Shape disk(Point c, double r);
  static Shape ellipse(Point c, double a, double b, double rot);
  static Shape polygon(std::vector<Point> verts);
  static Shape ball(Point c, double r);
};

namespace detail {

inline double polygon_signed_area(const std::vector<Point>& v) {
  double a = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  auto orient = [](const Point& p, const Point& q, const Point& r) {
    const double v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    return (v > 0.0) - (v < 0.0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4;
}

inline double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double t = std::clamp(dot(p - a, ab) / norm2(ab), 0.0, 1.0);
  return norm(p - (a + t * ab));
}

}  // namespace detail

inline Shape Shape::disk(Point c, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("disk radius must be positive");
  Shape s;
  s.kind = ShapeKind::Disk;
  s.dim = 2;
  s.center = c;
  s.radius = r;
  return s;
}

inline Shape Shape::ball(Point c, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  Shape s;
  s.kind = ShapeKind::Ball;
  s.dim = 3;
  s.center = c;
  s.radius = r;
  return s;
}

inline Shape Shape::ellipse(Point c, double a, double b, double rot) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ellipse semi-axes must be positive");
  Shape s;
  s.kind = ShapeKind::Ellipse;
  s.dim = 2;
  s.center = c;
  s.semi_a = a;
  s.semi_b = b;
  s.rotation = rot;
  return s;
}

inline Shape Shape::polygon(std::vector<Point> verts) {
  if (verts.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  const double area = detail::polygon_signed_area(verts);
  if (!(area > 0.0)) throw std::invalid_argument("polygon must be counter-clockwise with positive area");
  const size_t n = verts.size();
  for (size_t i = 0; i < n; ++i) {
    if (norm(verts[(i + 1) % n] - verts[i]) == 0.0) throw std::invalid_argument("polygon has a zero-length edge");
    for (size_t j = i + 1; j < n; ++j) {
      // skip adjacent edges (shared endpoint)
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_intersect(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]))
        throw std::invalid_argument("polygon must be simple");
    }
  }
  Shape s;
  s.kind = ShapeKind::Polygon;
  s.dim = 2;
  s.vertices = std::move(verts);
  return s;
}

inline BBox bounding_box(const Shape& s) {
  switch (s.kind) {
    case ShapeKind::Disk:
      return {{s.center.x - s.radius, s.center.y - s.radius, 0.0},
              {s.center.x + s.radius, s.center.y + s.radius, 0.0}};
    case ShapeKind::Ball:
      return {{s.center.x - s.radius, s.center.y - s.radius, s.center.z - s.radius},
              {s.center.x + s.radius, s.center.y + s.radius, s.center.z + s.radius}};
    case ShapeKind::Ellipse: {
      // extent of a rotated ellipse along each axis
      const double c = std::cos(s.rotation), sn = std::sin(s.rotation);
      const double ex = std::sqrt(s.semi_a * s.semi_a * c * c + s.semi_b * s.semi_b * sn * sn);
      const double ey = std::sqrt(s.semi_a * s.semi_a * sn * sn + s.semi_b * s.semi_b * c * c);
      return {{s.center.x - ex, s.center.y - ey, 0.0}, {s.center.x + ex, s.center.y + ey, 0.0}};
    }
    case ShapeKind::Polygon: {
      Point lo = s.vertices[0], hi = s.vertices[0];
      for (const auto& v : s.vertices) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
      }
      return {lo, hi};
    }
  }
  throw std::logic_error("unreachable");
}

inline double diameter(const Shape& s) {
  const BBox b = bounding_box(s);
  return norm(b.hi - b.lo);
}

inline Point shape_center(const Shape& s) {
  if (s.kind == ShapeKind::Polygon) {
    Point c{};
    for (const auto& v : s.vertices) c = c + v;
    return (1.0 / static_cast<double>(s.vertices.size())) * c;
  }
  return s.center;
}

/// Unsigned distance to the boundary.
inline double boundary_distance(const Shape& s, const Point& x) {
  switch (s.kind) {
    case ShapeKind::Disk:
    case ShapeKind::Ball:
      return std::abs(norm(x - s.center) - s.radius);
    case ShapeKind::Polygon: {
      double d = std::numeric_limits<double>::max();
      const size_t n = s.vertices.size();
      for (size_t i = 0; i < n; ++i)
        d = std::min(d, detail::point_segment_distance(x, s.vertices[i], s.vertices[(i + 1) % n]));
      return d;
    }
    case ShapeKind::Ellipse: {
      // closest boundary point by Newton on the parameter, seeded from a scan
      const Point q0 = rotate2d(x - s.center, -s.rotation);
      double best_t = 0.0, best_d = std::numeric_limits<double>::max();
      for (int i = 0; i < 64; ++i) {
        const double t = 2.0 * M_PI * i / 64.0;
        const Point p{s.semi_a * std::cos(t), s.semi_b * std::sin(t), 0.0};
        const double d = norm(q0 - p);
        if (d < best_d) {
          best_d = d;
          best_t = t;
        }
      }
      double t = best_t;
      for (int it = 0; it < 12; ++it) {
        const double ct = std::cos(t), st = std::sin(t);
        const Point p{s.semi_a * ct, s.semi_b * st, 0.0};
        const Point dp{-s.semi_a * st, s.semi_b * ct, 0.0};
        const Point d2p{-s.semi_a * ct, -s.semi_b * st, 0.0};
        const double g = dot(q0 - p, dp);
        const double gp = dot(q0 - p, d2p) - dot(dp, dp);
        if (gp == 0.0) break;
        t -= g / gp;
      }
      const Point p{s.semi_a * std::cos(t), s.semi_b * std::sin(t), 0.0};
      return std::min(best_d, norm(q0 - p));
    }
  }
  throw std::logic_error("unreachable");
}

/// True iff x lies in the open interior; points within 1e-12*diameter of the
/// boundary resolve to false.
inline bool contains(const Shape& s, const Point& x) {
  if (!std::isfinite(x.x) || !std::isfinite(x.y) || !std::isfinite(x.z))
    throw std::invalid_argument("contains: point must be finite");
  const double tol = 1e-12 * std::max(1.0, diameter(s));
  switch (s.kind) {
    case ShapeKind::Disk:
    case ShapeKind::Ball: {
      if (s.kind == ShapeKind::Disk && x.z != 0.0) throw std::invalid_argument("contains: dimension mismatch");
      return norm(x - s.center) < s.radius - tol;
    }
    case ShapeKind::Ellipse: {
      if (x.z != 0.0) throw std::invalid_argument("contains: dimension mismatch");
      if (boundary_distance(s, x) <= tol) return false;
      const Point q = rotate2d(x - s.center, -s.rotation);
      const double u = q.x / s.semi_a, v = q.y / s.semi_b;
      return u * u + v * v < 1.0;
    }
    case ShapeKind::Polygon: {
      if (x.z != 0.0) throw std::invalid_argument("contains: dimension mismatch");
      if (boundary_distance(s, x) <= tol) return false;
      // crossing number
      bool inside = false;
      const size_t n = s.vertices.size();
      for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = s.vertices[i];
        const Point& b = s.vertices[j];
        if ((a.y > x.y) != (b.y > x.y)) {
          const double t = (x.y - a.y) / (b.y - a.y);
          if (x.x < a.x + t * (b.x - a.x)) inside = !inside;
        }
      }
      return inside;
    }
  }
  throw std::logic_error("unreachable");
}

struct BoundaryPoint {
  Point p;
  Point normal;  // outward unit normal; angle bisector at flagged corners
  double weight; // boundary quadrature weight (zero at flagged corners)
  bool corner{false};
};

/// Boundary quadrature sample. Smooth shapes use equispaced-parameter nodes
/// with arc-length trapezoidal weights; polygons use per-edge midpoint nodes
/// plus all vertices flagged as corners with zero weight.
inline std::vector<BoundaryPoint> boundary_sample(const Shape& s, int count) {
  if (count < 4) throw std::invalid_argument("boundary_sample: count must be >= 4");
  std::vector<BoundaryPoint> out;
  switch (s.kind) {
    case ShapeKind::Disk: {
      out.reserve(count);
      const double w = 2.0 * M_PI * s.radius / count;
      for (int i = 0; i < count; ++i) {
        const double t = 2.0 * M_PI * i / count;
        const Point nrm{std::cos(t), std::sin(t), 0.0};
        out.push_back({s.center + s.radius * nrm, nrm, w, false});
      }
      return out;
    }
    case ShapeKind::Ellipse: {
      out.reserve(count);
      const double dt = 2.0 * M_PI / count;
      for (int i = 0; i < count; ++i) {
        const double t = dt * i;
        const double ct = std::cos(t), st = std::sin(t);
        const Point p = s.center + rotate2d({s.semi_a * ct, s.semi_b * st, 0.0}, s.rotation);
        const Point nrm = normalized(rotate2d({s.semi_b * ct, s.semi_a * st, 0.0}, s.rotation));
        const double speed = std::hypot(s.semi_a * st, s.semi_b * ct);
        out.push_back({p, nrm, speed * dt, false});
      }
      return out;
    }
    case ShapeKind::Polygon: {
      const size_t n = s.vertices.size();
      std::vector<double> len(n);
      double perimeter = 0.0;
      for (size_t i = 0; i < n; ++i) {
        len[i] = norm(s.vertices[(i + 1) % n] - s.vertices[i]);
        perimeter += len[i];
      }
      const int interior = std::max<int>(static_cast<int>(n), count - static_cast<int>(n));
      for (size_t i = 0; i < n; ++i) {
        const Point a = s.vertices[i];
        const Point b = s.vertices[(i + 1) % n];
        const Point tangent = normalized(b - a);
        const Point edge_nrm{tangent.y, -tangent.x, 0.0};  // outward for CCW orientation
        const Point prev = s.vertices[(i + n - 1) % n];
        const Point prev_t = normalized(a - prev);
        const Point prev_nrm{prev_t.y, -prev_t.x, 0.0};
        out.push_back({a, normalized(prev_nrm + edge_nrm), 0.0, true});
        const int m = std::max(1, static_cast<int>(std::lround(interior * len[i] / perimeter)));
        for (int j = 0; j < m; ++j) {
          const double t = (j + 0.5) / m;
          out.push_back({a + t * (b - a), edge_nrm, len[i] / m, false});
        }
      }
      return out;
    }
    case ShapeKind::Ball: {
      // Fibonacci sphere, antipodally symmetrized so odd moments vanish exactly
      const int half = (count + 1) / 2;
      out.reserve(2 * half);
      const double golden = M_PI * (3.0 - std::sqrt(5.0));
      const double w = 4.0 * M_PI * s.radius * s.radius / (2.0 * half);
      for (int i = 0; i < half; ++i) {
        const double zc = 1.0 - (2.0 * i + 1.0) / (2.0 * half);
        const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        const double phi = golden * i;
        const Point nrm{r * std::cos(phi), r * std::sin(phi), zc};
        out.push_back({s.center + s.radius * nrm, nrm, w, false});
        out.push_back({s.center - s.radius * nrm, -nrm, w, false});
      }
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

/// Rotation of the shape itself about the origin (2D shapes only).
inline Shape rotated(const Shape& s, double angle) {
  Shape r = s;
  switch (s.kind) {
    case ShapeKind::Disk:
      r.center = rotate2d(s.center, angle);
      return r;
    case ShapeKind::Ellipse:
      r.center = rotate2d(s.center, angle);
      r.rotation = s.rotation + angle;
      return r;
    case ShapeKind::Polygon:
      for (auto& v : r.vertices) v = rotate2d(v, angle);
      return r;
    default:
      throw std::invalid_argument("rotated: 2D shapes only");
  }
}

// ---------------------------------------------------------------------------

struct Grid {
  int dim{2};
  Point origin{};  // lower corner of the grid box
  double h{0.0};
  std::array<int, 3> counts{1, 1, 1};

  size_t size() const {
    return static_cast<size_t>(counts[0]) * counts[1] * counts[2];
  }
  Point cell_center(int i, int j, int k = 0) const {
    return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h, dim == 3 ? origin.z + (k + 0.5) * h : 0.0};
  }
  size_t index(int i, int j, int k = 0) const {
    return (static_cast<size_t>(k) * counts[1] + j) * counts[0] + i;
  }
  /// Cell containing x, or false if outside the box.
  bool locate(const Point& x, int& i, int& j, int& k) const {
    i = static_cast<int>(std::floor((x.x - origin.x) / h));
    j = static_cast<int>(std::floor((x.y - origin.y) / h));
    k = dim == 3 ? static_cast<int>(std::floor((x.z - origin.z) / h)) : 0;
    return i >= 0 && i < counts[0] && j >= 0 && j < counts[1] && k >= 0 && k < counts[2];
  }
};

/// Grid box centered on the shape's bounding box, inflated by `margin` on all
/// sides (margin must be >= 2h). Counts are even so the box stays symmetric.
inline Grid make_grid(const Shape& s, double h, double margin, size_t max_cells = (1ull << 26)) {
  if (!(h > 0.0)) throw std::invalid_argument("make_grid: h must be positive");
  if (margin < 2.0 * h) throw std::invalid_argument("make_grid: margin must be >= 2h");
  const BBox bb = bounding_box(s);
  Grid g;
  g.dim = s.dim;
  g.h = h;
  const Point mid = 0.5 * (bb.lo + bb.hi);
  for (int a = 0; a < s.dim; ++a) {
    const double half = 0.5 * (component(bb.hi, a) - component(bb.lo, a)) + margin;
    const int c = 2 * static_cast<int>(std::ceil(half / h));
    g.counts[a] = c;
  }
  g.origin = {mid.x - 0.5 * g.counts[0] * h, mid.y - 0.5 * g.counts[1] * h,
              s.dim == 3 ? mid.z - 0.5 * g.counts[2] * h : 0.0};
  if (g.size() > max_cells) throw std::invalid_argument("make_grid: cell budget exceeded");
  return g;
}

// ---------------------------------------------------------------------------

enum class ContrastKind { Constant, RadialPolynomial };

/// Refractive index inside the shape: a constant n, or a polynomial in the
/// distance r from the shape center.
struct Contrast {
  ContrastKind kind{ContrastKind::Constant};
  double value{1.0};
  std::vector<double> coeffs;  // n(r) = sum coeffs[j] r^j

  double eval(const Point& x, const Point& center) const {
    if (kind == ContrastKind::Constant) return value;
    const double r = norm(x - center);
    double n = 0.0, rp = 1.0;
    for (double c : coeffs) {
      n += c * rp;
      rp *= r;
    }
    return n;
  }
  static Contrast constant(double n) { return {ContrastKind::Constant, n, {}}; }
  static Contrast radial(std::vector<double> c) { return {ContrastKind::RadialPolynomial, 0.0, std::move(c)}; }
};

struct MediumField {
  Grid grid;
  Shape shape;
  Contrast contrast;
  std::vector<double> q;        // 1 outside, n(x) inside
  std::vector<uint8_t> inside;  // cell-center indicator of D
  size_t inside_count{0};
  double measure_estimate{0.0};  // h^m * inside_count
};

/// Cell-center rasterization of the coefficient q.
inline MediumField rasterize(const Shape& s, const Contrast& c, const Grid& g, double n_floor = 1e-3) {
  const BBox bb = bounding_box(s);
  for (int a = 0; a < s.dim; ++a) {
    if (component(bb.lo, a) - component(g.origin, a) < 2.0 * g.h - 1e-12 ||
        component(g.origin, a) + g.counts[a] * g.h - component(bb.hi, a) < 2.0 * g.h - 1e-12)
      throw std::invalid_argument("rasterize: grid too small for shape");
  }
  MediumField m;
  m.grid = g;
  m.shape = s;
  m.contrast = c;
  m.q.assign(g.size(), 1.0);
  m.inside.assign(g.size(), 0);
  const Point ctr = shape_center(s);
  for (int k = 0; k < g.counts[2]; ++k)
    for (int j = 0; j < g.counts[1]; ++j)
      for (int i = 0; i < g.counts[0]; ++i) {
        const Point x = g.cell_center(i, j, k);
        if (contains(s, x)) {
          const double n = c.eval(x, ctr);
          if (!(n >= n_floor)) throw std::invalid_argument("rasterize: refractive index below floor");
          const size_t idx = g.index(i, j, k);
          m.q[idx] = n;
          m.inside[idx] = 1;
          ++m.inside_count;
        }
      }
  m.measure_estimate = std::pow(g.h, s.dim) * static_cast<double>(m.inside_count);
  return m;
}

// ---------------------------------------------------------------------------
// JSON serialization of shapes: {"type": ..., parameters...}

inline nlohmann::json to_json(const Shape& s) {
  nlohmann::json j;
  switch (s.kind) {
    case ShapeKind::Disk:
      j["type"] = "disk";
      j["center"] = {s.center.x, s.center.y};
      j["radius"] = s.radius;
      break;
    case ShapeKind::Ball:
      j["type"] = "ball";
      j["center"] = {s.center.x, s.center.y, s.center.z};
      j["radius"] = s.radius;
      break;
    case ShapeKind::Ellipse:
      j["type"] = "ellipse";
      j["center"] = {s.center.x, s.center.y};
      j["semi_axes"] = {s.semi_a, s.semi_b};
      j["rotation"] = s.rotation;
      break;
    case ShapeKind::Polygon: {
      j["type"] = "polygon";
      auto& arr = j["vertices"] = nlohmann::json::array();
      for (const auto& v : s.vertices) arr.push_back({v.x, v.y});
      break;
    }
  }
  return j;
}

inline Shape shape_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "disk") {
    const auto c = j.at("center");
    return Shape::disk({c.at(0), c.at(1), 0.0}, j.at("radius"));
  }
  if (type == "ball") {
    const auto c = j.at("center");
    return Shape::ball({c.at(0), c.at(1), c.at(2)}, j.at("radius"));
  }
  if (type == "ellipse") {
    const auto c = j.at("center");
    const auto ax = j.at("semi_axes");
    return Shape::ellipse({c.at(0), c.at(1), 0.0}, ax.at(0), ax.at(1), j.value("rotation", 0.0));
  }
  if (type == "polygon") {
    std::vector<Point> verts;
    for (const auto& v : j.at("vertices")) verts.push_back({v.at(0), v.at(1), 0.0});
    return Shape::polygon(std::move(verts));
  }
  throw std::invalid_argument("shape_from_json: unknown type " + type);
}

inline nlohmann::json to_json(const Contrast& c) {
  nlohmann::json j;
  if (c.kind == ContrastKind::Constant) {
    j["kind"] = "constant";
    j["n"] = c.value;
  } else {
    j["kind"] = "radial_polynomial";
    j["coeffs"] = c.coeffs;
  }
  return j;
}

inline Contrast contrast_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return Contrast::constant(j.at("n"));
  if (kind == "radial_polynomial") return Contrast::radial(j.at("coeffs").get<std::vector<double>>());
  throw std::invalid_argument("contrast_from_json: unknown kind " + kind);
}

}  // namespace helmlab::geometry
