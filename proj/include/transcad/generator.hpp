#pragma once

#include <cmath>
#include <vector>

#include "transcad/cad.hpp"
#include "transcad/errors.hpp"
#include "transcad/rng.hpp"
#include "transcad/serialize.hpp"

namespace transcad {

// Bounds for the synthetic desk-scale dataset. Loops are either a single
// circle or a closed chain of 3..6 lines/arcs; margins keep every defining
// distance well above the quantization grid so type inference is stable
// after quantization.
struct GeneratorSpec {
  int min_steps = 1;
  int max_steps = 2;
  int min_loops = 1;
  int max_loops = 2;
  int min_prims = 3;
  int max_prims = 6;
  double circle_prob = 0.35;
  double arc_prob = 0.4;
  int max_retries = 100;
};

namespace detail {

struct Rect {
  Vec2 lo, hi;
  Vec2 center() const { return {(lo.x + hi.x) / 2, (lo.y + hi.y) / 2}; }
  double half_span() const { return std::min(hi.x - lo.x, hi.y - lo.y) / 2; }
};

inline Vec2 round_pt(Vec2 p) { return {round_sig9(p.x), round_sig9(p.y)}; }

inline Loop make_circle_loop(Rng& rng, const Rect& rect) {
  const double half = rect.half_span();
  const double radius = rng.uniform(0.35, 0.8) * half;
  const Vec2 c = rect.center();
  const Vec2 jitter{rng.uniform(-1.0, 1.0) * (half - radius) * 0.8,
                    rng.uniform(-1.0, 1.0) * (half - radius) * 0.8};
  Loop loop;
  PrimitiveDelta prim = PrimitiveDelta::circle(c + jitter, radius);
  // round the stored coordinates themselves so serialization stays exact
  prim.start = round_pt(prim.start);
  prim.mid = round_pt(prim.mid);
  prim.end = prim.start;
  loop.primitives.push_back(prim);
  return loop;
}

// Star-shaped polygon around the rect center; a subset of edges bulge
// outward into arcs with a sagitta big enough to survive quantization.
inline Loop make_polyline_loop(Rng& rng, const Rect& rect, int prims, double arc_prob) {
  const Vec2 c = rect.center();
  const double half = rect.half_span();
  std::vector<Vec2> corners;
  for (int attempt = 0; attempt < 50; ++attempt) {
    corners.clear();
    bool ok = true;
    for (int i = 0; i < prims; ++i) {
      const double angle = 2.0 * M_PI * (static_cast<double>(i) + rng.uniform(0.15, 0.85)) /
                           static_cast<double>(prims);
      const double r = rng.uniform(0.55, 0.85) * half;
      corners.push_back(round_pt({c.x + r * std::cos(angle), c.y + r * std::sin(angle)}));
    }
    for (int i = 0; i < prims && ok; ++i) {
      const double d = distance(corners[static_cast<std::size_t>(i)],
                                corners[static_cast<std::size_t>((i + 1) % prims)]);
      if (d < 0.06) ok = false;
    }
    if (ok) break;
  }
  Loop loop;
  for (int i = 0; i < prims; ++i) {
    const Vec2 a = corners[static_cast<std::size_t>(i)];
    const Vec2 b = corners[static_cast<std::size_t>((i + 1) % prims)];
    if (rng.uniform() < arc_prob) {
      const Vec2 m = (a + b) * 0.5;
      Vec2 out = normalized(m - c);
      if (out == Vec2{0.0, 0.0}) out = {1.0, 0.0};
      const double sagitta = rng.uniform(0.25, 0.6) * std::min(0.35 * distance(a, b), half * 0.3);
      loop.primitives.push_back(PrimitiveDelta::arc(a, round_pt(m + out * sagitta), b));
    } else {
      loop.primitives.push_back(PrimitiveDelta::line(a, b));
    }
  }
  return loop;
}

}  // namespace detail

// Deterministic in the seed; regenerates internally until validate() passes
// (bounded retries).
inline CadSequence generate_random_sequence(std::uint64_t seed, const GeneratorSpec& spec = {}) {
  Rng rng(derive_seed(seed, 0x5eedULL));
  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    CadSequence seq;
    const int steps = static_cast<int>(rng.uniform_int(spec.min_steps, spec.max_steps));
    for (int s = 0; s < steps; ++s) {
      Step step;
      const int loops = static_cast<int>(rng.uniform_int(spec.min_loops, spec.max_loops));
      // disjoint sub-rectangles keep multi-loop sketches simple (even-odd
      // regions with island loops)
      std::vector<detail::Rect> rects;
      if (loops == 1) {
        rects.push_back({{0.1, 0.1}, {0.9, 0.9}});
      } else {
        rects.push_back({{0.06, 0.2}, {0.48, 0.8}});
        rects.push_back({{0.52, 0.2}, {0.94, 0.8}});
      }
      for (int l = 0; l < loops; ++l) {
        if (rng.uniform() < spec.circle_prob) {
          step.loops.push_back(detail::make_circle_loop(rng, rects[static_cast<std::size_t>(l)]));
        } else {
          const int prims = static_cast<int>(rng.uniform_int(spec.min_prims, spec.max_prims));
          step.loops.push_back(detail::make_polyline_loop(
              rng, rects[static_cast<std::size_t>(l)], prims, spec.arc_prob));
        }
      }
      Extrusion e;
      for (auto& v : e.orientation) v = round_sig9(rng.uniform(0.0, 1.0));
      for (auto& v : e.origin) v = round_sig9(rng.uniform(0.3, 0.7));
      e.scale = round_sig9(rng.uniform(0.25, 0.6));
      e.distances[0] = round_sig9(rng.uniform(0.1, 0.6));
      const double extent_draw = rng.uniform();
      e.extent = extent_draw < 0.6 ? ExtentType::OneSided
                                   : (extent_draw < 0.85 ? ExtentType::Symmetric
                                                         : ExtentType::TwoSided);
      e.distances[1] =
          e.extent == ExtentType::TwoSided ? round_sig9(rng.uniform(0.1, 0.4)) : 0.0;
      e.boolean_op = s == 0 ? BooleanOp::New
                            : (rng.uniform() < 0.7 ? BooleanOp::Join : BooleanOp::Cut);
      step.extrusion = e;
      seq.steps.push_back(std::move(step));
    }
    if (validate(seq).valid) return seq;
  }
  throw Error("generate_random_sequence: no valid sequence after retries");
}

}  // namespace transcad
