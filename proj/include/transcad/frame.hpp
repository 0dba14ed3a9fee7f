#pragma once

#include <utility>

#include "transcad/cad.hpp"
#include "transcad/geom2d.hpp"
#include "transcad/vec3.hpp"

namespace transcad {

// World mapping of the normalized extrusion parameters (fixed bijections):
//   angles      (theta, phi, gamma) in [0,1] -> Z-Y-Z Euler angles in [-pi, pi]
//   translation origin in [0,1]^3            -> [-1, 1]^3
//   scale       in [0,1]                     -> 2 * scale (floored at 1e-6)
//   distances   kept as-is in [0,1]
// Sketch point (u, v) maps to T + R * (s*(u-1/2), s*(v-1/2), w) with w the
// coordinate along the sketch plane normal.
struct Frame {
  Mat3 rotation;
  Vec3 translation;
  double scale = 1.0;

  static Frame from_extrusion(const Extrusion& e) {
    Frame f;
    auto angle = [](double t) { return (2.0 * t - 1.0) * M_PI; };
    f.rotation = rotation_z(angle(e.orientation[0])) * rotation_y(angle(e.orientation[1])) *
                 rotation_z(angle(e.orientation[2]));
    f.translation = {2.0 * e.origin[0] - 1.0, 2.0 * e.origin[1] - 1.0, 2.0 * e.origin[2] - 1.0};
    f.scale = std::max(2.0 * e.scale, 1e-6);
    return f;
  }

  Vec3 to_world(const Vec2& sketch, double w) const {
    const Vec3 local{scale * (sketch.x - 0.5), scale * (sketch.y - 0.5), w};
    return translation + rotation * local;
  }

  // inverse of to_world: (u, v, w) in sketch coordinates
  Vec3 to_local(const Vec3& world) const {
    const Vec3 l = rotation.transposed() * (world - translation);
    return {l.x / scale + 0.5, l.y / scale + 0.5, l.z};
  }

  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  Vec3 plane_normal() const { return rotation * Vec3{0.0, 0.0, 1.0}; }
};

// Signed interval [w0, w1] swept along the plane normal.
inline std::pair<double, double> extent_interval(const Extrusion& e) {
  const double d1 = e.distances[0];
  const double d2 = e.distances[1];
  switch (e.extent) {
    case ExtentType::OneSided: return {0.0, d1};
    case ExtentType::Symmetric: return {-0.5 * d1, 0.5 * d1};
    case ExtentType::TwoSided: return {-d2, d1};
  }
  return {0.0, d1};
}

}  // namespace transcad
