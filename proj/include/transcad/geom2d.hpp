#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace transcad {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

inline Vec2 normalized(const Vec2& a) {
  const double n = norm(a);
  return n > 0.0 ? Vec2{a.x / n, a.y / n} : Vec2{0.0, 0.0};
}

// Perpendicular distance from q to the segment [a, b].
inline double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len_sq = dot(ab, ab);
  if (len_sq <= 0.0) return distance(q, a);
  const double t = std::clamp(dot(q - a, ab) / len_sq, 0.0, 1.0);
  return distance(q, a + ab * t);
}

// Circumcircle of three non-collinear points. Returns false when the points
// are (numerically) collinear.
inline bool circumcircle(const Vec2& a, const Vec2& b, const Vec2& c, Vec2& center,
                         double& radius) {
  const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
  if (std::abs(d) < 1e-14) return false;
  const double a2 = dot(a, a), b2 = dot(b, b), c2 = dot(c, c);
  center.x = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
  center.y = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
  radius = distance(a, center);
  return true;
}

// Even-odd ray casting; boundary handling is up to the caller (see
// point_in_loop in tessellate.hpp for the boundary-inclusive variant).
inline bool point_in_polygon_eo(const Vec2& q, std::span<const Vec2> poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& pi = poly[i];
    const Vec2& pj = poly[j];
    if ((pi.y > q.y) != (pj.y > q.y)) {
      const double x_cross = (pj.x - pi.x) * (q.y - pi.y) / (pj.y - pi.y) + pi.x;
      if (q.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline double polygon_boundary_distance(const Vec2& q, std::span<const Vec2> poly) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    best = std::min(best, point_segment_distance(q, poly[j], poly[i]));
  }
  return best;
}

inline double polygon_signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    a += cross(poly[j], poly[i]);
  }
  return 0.5 * a;
}

struct Aabb2 {
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void extend(const Vec2& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

}  // namespace transcad
