#pragma once

#include <cmath>
#include <vector>

#include "transcad/cad.hpp"
#include "transcad/errors.hpp"
#include "transcad/geom2d.hpp"

namespace transcad {

constexpr double kChordAngleStep = 2.0 * M_PI / 64.0;

namespace detail {

// Appends the arc polyline from `a` through `m` to `b` (excluding `b`).
// The sweep direction is the one that passes through the mid point.
inline void tessellate_arc(const Vec2& a, const Vec2& m, const Vec2& b,
                           double max_step, std::vector<Vec2>& out) {
  Vec2 center;
  double radius = 0.0;
  if (!circumcircle(a, m, b, center, radius)) {
    out.push_back(a);  // collinear fallback: straight segment
    return;
  }
  const double a0 = std::atan2(a.y - center.y, a.x - center.x);
  const double am = std::atan2(m.y - center.y, m.x - center.x);
  const double a1 = std::atan2(b.y - center.y, b.x - center.x);
  auto ccw_delta = [](double from, double to) {
    double d = to - from;
    while (d < 0.0) d += 2.0 * M_PI;
    while (d >= 2.0 * M_PI) d -= 2.0 * M_PI;
    return d;
  };
  // choose the sweep that contains the mid point
  const bool ccw = ccw_delta(a0, am) <= ccw_delta(a0, a1);
  const double span = ccw ? ccw_delta(a0, a1) : -ccw_delta(a1, a0);
  const int segments = std::max(1, static_cast<int>(std::ceil(std::abs(span) / max_step)));
  for (int i = 0; i < segments; ++i) {
    const double t = a0 + span * static_cast<double>(i) / static_cast<double>(segments);
    out.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
  }
}

}  // namespace detail

// Loop -> closed polygon. Lines are copied verbatim; arcs and circles are
// subdivided at an angular step <= 2*pi/64. The closing edge back to the
// first vertex is implicit.
inline std::vector<Vec2> tessellate_loop(const Loop& loop, double max_step = kChordAngleStep) {
  if (loop.primitives.empty()) throw OpenLoopError("empty loop");

  // sole-circle loops tessellate to a regular polygon
  if (loop.primitives.size() == 1) {
    const auto t = classify_primitive(loop.primitives.front());
    if (t && *t == PrimitiveType::Circle) {
      Vec2 center;
      double radius = 0.0;
      circle_geometry(loop.primitives.front(), center, radius);
      const int segments = std::max(3, static_cast<int>(std::ceil(2.0 * M_PI / max_step)));
      std::vector<Vec2> poly;
      poly.reserve(static_cast<std::size_t>(segments));
      const Vec2 s = loop.primitives.front().start;
      const double a0 = std::atan2(s.y - center.y, s.x - center.x);
      for (int i = 0; i < segments; ++i) {
        const double a = a0 + 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(segments);
        poly.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
      }
      return poly;
    }
  }

  if (!loop_is_closed(loop)) throw OpenLoopError("loop is not closed");

  std::vector<Vec2> poly;
  for (const auto& prim : loop.primitives) {
    const auto t = classify_primitive(prim);
    if (!t) throw MalformedPrimitiveError("cannot tessellate malformed primitive");
    switch (*t) {
      case PrimitiveType::Line:
        poly.push_back(prim.start);
        break;
      case PrimitiveType::Arc:
        detail::tessellate_arc(prim.start, prim.mid, prim.end, max_step, poly);
        break;
      case PrimitiveType::Circle:
        throw MalformedPrimitiveError("circle inside a multi-primitive loop");
    }
  }
  return poly;
}

// Boundary-inclusive even-odd membership: points within eps of the polygon
// boundary count as inside.
inline bool point_in_loop(const Vec2& q, std::span<const Vec2> polygon,
                          double eps = kEpsClose) {
  if (point_in_polygon_eo(q, polygon)) return true;
  return polygon_boundary_distance(q, polygon) <= eps;
}

// A sketch region is the even-odd union of one or more tessellated loops
// (islands and holes both work).
struct SketchRegion {
  std::vector<std::vector<Vec2>> rings;

  bool contains_eo(const Vec2& q) const {
    bool inside = false;
    for (const auto& ring : rings)
      if (point_in_polygon_eo(q, ring)) inside = !inside;
    return inside;
  }

  double boundary_distance(const Vec2& q) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ring : rings)
      best = std::min(best, polygon_boundary_distance(q, ring));
    return best;
  }

  bool contains(const Vec2& q, double eps = kEpsClose) const {
    return contains_eo(q) || boundary_distance(q) <= eps;
  }

  Aabb2 bbox() const {
    Aabb2 box;
    for (const auto& ring : rings)
      for (const auto& p : ring) box.extend(p);
    return box;
  }

  // Exact for non-crossing rings: each ring's unsigned area enters with a
  // sign from its even-odd nesting depth.
  double area() const {
    double total = 0.0;
    for (std::size_t i = 0; i < rings.size(); ++i) {
      int depth = 0;
      const Vec2 probe = rings[i].front();
      for (std::size_t j = 0; j < rings.size(); ++j) {
        if (j == i) continue;
        if (point_in_polygon_eo(probe, rings[j])) ++depth;
      }
      const double a = std::abs(polygon_signed_area(rings[i]));
      total += (depth % 2 == 0) ? a : -a;
    }
    return std::max(total, 0.0);
  }
};

inline SketchRegion build_region(const std::vector<Loop>& loops,
                                 double max_step = kChordAngleStep) {
  SketchRegion region;
  for (const auto& loop : loops) region.rings.push_back(tessellate_loop(loop, max_step));
  return region;
}

}  // namespace transcad
