#pragma once

#include <cmath>
#include <vector>

#include "transcad/cad.hpp"
#include "transcad/errors.hpp"
#include "transcad/frame.hpp"
#include "transcad/point_cloud.hpp"
#include "transcad/rng.hpp"
#include "transcad/tessellate.hpp"

namespace transcad {

// World-unit tolerance separating "on the boundary" from "strictly inside"
// during CSG classification.
constexpr double kCsgTolerance = 1e-4;

struct SamplerOptions {
  int oversample = 8;        // candidate points per requested output point
  double csg_tol = kCsgTolerance;
  double chord_step = kChordAngleStep;
  bool normalize = true;     // rescale the result into the unit box
  int max_refill_rounds = 4;
};

struct SamplerStats {
  int candidates = 0;
  int kept = 0;
  int rounds = 1;
};

namespace detail {

// One extruded sketch region: a generalized prism in its own frame.
struct Solid {
  SketchRegion region;
  Frame frame;
  double w0 = 0.0;
  double w1 = 0.0;
  BooleanOp op = BooleanOp::New;
  double area2d = 0.0;  // region area in sketch units

  bool degenerate() const { return w1 - w0 <= 0.0 || area2d <= 0.0 || region.rings.empty(); }

  // Membership with faces dilated (+tol) and eroded (-tol). The pair drives
  // the boundary test: a point is on the result's boundary iff it is inside
  // the dilated result and outside the eroded one.
  void classify(const Vec3& world, double tol, bool& plus, bool& minus) const {
    const Vec3 local = frame.to_local(world);
    const double tol2d = tol / frame.scale;
    const bool w_plus = local.z >= w0 - tol && local.z <= w1 + tol;
    const bool w_minus = local.z > w0 + tol && local.z < w1 - tol;
    if (!w_plus) {
      plus = false;
      minus = false;
      return;
    }
    const Vec2 uv{local.x, local.y};
    const bool in_eo = region.contains_eo(uv);
    const double bd = region.boundary_distance(uv);
    plus = in_eo || bd <= tol2d;
    minus = w_minus && in_eo && bd > tol2d;
  }
};

struct Candidate {
  Vec3 position;
  Vec3 normal;
  int solid = 0;
};

// Accumulate (plus, minus) membership across the boolean program. Cut swaps
// the operand tolerance so the dilated result stays a superset of the true
// closure and the eroded one a subset of the open interior.
inline void fold_membership(const std::vector<Solid>& solids, const Vec3& p, double tol,
                            bool& plus, bool& minus) {
  plus = false;
  minus = false;
  bool first = true;
  for (const auto& s : solids) {
    if (s.degenerate()) continue;
    bool sp = false, sm = false;
    s.classify(p, tol, sp, sm);
    if (first || s.op == BooleanOp::New || s.op == BooleanOp::Join) {
      plus = plus || sp;
      minus = minus || sm;
    } else if (s.op == BooleanOp::Cut) {
      plus = plus && !sm;
      minus = minus && !sp;
    } else {  // Intersect
      plus = plus && sp;
      minus = minus && sm;
    }
    first = false;
  }
}

// Outward 2D normal of a region boundary edge: the side whose offset point
// leaves the even-odd region.
inline Vec2 edge_outward_normal(const SketchRegion& region, const Vec2& a, const Vec2& b) {
  Vec2 n = normalized(Vec2{b.y - a.y, -(b.x - a.x)});
  const Vec2 mid = (a + b) * 0.5;
  const double probe = std::max(1e-7, 1e-3 * distance(a, b));
  if (region.contains_eo(mid + n * probe) && !region.contains_eo(mid - n * probe)) {
    n = n * -1.0;
  }
  return n;
}

// Jittered-grid samples over a rectangle, mapped through `emit`. Stratified
// sampling keeps the cross-resample chamfer noise well below an i.i.d.
// sampler's.
template <typename Emit>
void stratified_rect(Rng& rng, double w, double h, int count, Emit&& emit) {
  if (count <= 0 || w <= 0.0 || h <= 0.0) return;
  const double aspect = w / h;
  int cols = std::max(1, static_cast<int>(std::round(std::sqrt(count * aspect))));
  int rows = std::max(1, (count + cols - 1) / cols);
  int emitted = 0;
  for (int r = 0; r < rows && emitted < count; ++r) {
    for (int c = 0; c < cols && emitted < count; ++c) {
      const double u = (static_cast<double>(c) + rng.uniform()) / cols * w;
      const double v = (static_cast<double>(r) + rng.uniform()) / rows * h;
      emit(u, v);
      ++emitted;
    }
  }
}

inline void sample_solid_candidates(const Solid& solid, int solid_idx, int target,
                                    std::uint64_t seed, std::vector<Candidate>& out) {
  if (solid.degenerate() || target <= 0) return;
  const double s = solid.frame.scale;
  const double height = solid.w1 - solid.w0;
  const double cap_area = solid.area2d * s * s;

  struct Wall {
    Vec2 a, b;
    Vec2 outward;
    double area;
  };
  std::vector<Wall> walls;
  double wall_area = 0.0;
  for (const auto& ring : solid.region.rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      Wall wall;
      wall.a = ring[j];
      wall.b = ring[i];
      wall.outward = edge_outward_normal(solid.region, wall.a, wall.b);
      wall.area = distance(wall.a, wall.b) * s * height;
      wall_area += wall.area;
      walls.push_back(wall);
    }
  }
  const double total_area = 2.0 * cap_area + wall_area;
  if (total_area <= 0.0) return;

  const Vec3 plane_n = solid.frame.plane_normal();
  const Aabb2 box = solid.region.bbox();

  // caps: rejection inside the region bbox, grid stratified; the exact
  // region area fixes the acceptance rate so counts stay proportional
  for (int cap = 0; cap < 2; ++cap) {
    const double want = static_cast<double>(target) * cap_area / total_area;
    const int accepted_target = static_cast<int>(std::round(want));
    if (accepted_target <= 0) continue;
    const double accept_ratio =
        std::max(1e-6, solid.area2d / std::max(1e-12, box.width() * box.height()));
    const int trials = static_cast<int>(std::ceil(accepted_target / accept_ratio)) + 8;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(solid_idx * 4096 + cap)));
    const double w_coord = cap == 0 ? solid.w0 : solid.w1;
    const Vec3 normal = cap == 0 ? plane_n * -1.0 : plane_n;
    int accepted = 0;
    stratified_rect(rng, box.width(), box.height(), trials, [&](double u, double v) {
      if (accepted >= accepted_target) return;
      const Vec2 p{box.lo.x + u, box.lo.y + v};
      if (!solid.region.contains_eo(p)) return;
      out.push_back({solid.frame.to_world(p, w_coord), normal, solid_idx});
      ++accepted;
    });
  }

  // lateral walls: one jittered grid per boundary edge
  for (std::size_t wi = 0; wi < walls.size(); ++wi) {
    const Wall& wall = walls[wi];
    const int count =
        static_cast<int>(std::round(static_cast<double>(target) * wall.area / total_area));
    if (count <= 0) continue;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(solid_idx * 4096 + 2 + static_cast<int>(wi))));
    const Vec2 dir = wall.b - wall.a;
    const Vec3 normal = solid.frame.rotate({wall.outward.x, wall.outward.y, 0.0});
    stratified_rect(rng, distance(wall.a, wall.b), height, count, [&](double t, double w) {
      const Vec2 p = wall.a + normalized(dir) * t;
      out.push_back({solid.frame.to_world(p, solid.w0 + w), normal, solid_idx});
    });
  }
}

}  // namespace detail

inline std::vector<detail::Solid> build_solids(const CadSequence& seq,
                                               double chord_step = kChordAngleStep) {
  std::vector<detail::Solid> solids;
  for (const auto& step : seq.steps) {
    if (!step.extrusion || step.loops.empty()) continue;
    detail::Solid solid;
    solid.region = build_region(step.loops, chord_step);
    solid.frame = Frame::from_extrusion(*step.extrusion);
    const auto [w0, w1] = extent_interval(*step.extrusion);
    solid.w0 = w0;
    solid.w1 = w1;
    solid.op = step.extrusion->boolean_op;
    solid.area2d = solid.region.area();
    solids.push_back(std::move(solid));
  }
  return solids;
}

// Samples n oriented points on the boundary of the CSG result. Uniform by
// area over caps and lateral walls, filtered by the boundary test, then
// downsampled to exactly n. Deterministic in the seed.
inline PointCloud sample_surface(const CadSequence& seq, int n, std::uint64_t seed,
                                 const SamplerOptions& opt = {}, SamplerStats* stats = nullptr) {
  if (n <= 0) throw Error("sample_surface: n must be positive");
  const auto solids = build_solids(seq, opt.chord_step);
  double total_area = 0.0;
  for (const auto& s : solids) {
    if (s.degenerate()) continue;
    double walls = 0.0;
    for (const auto& ring : s.region.rings) {
      const std::size_t rn = ring.size();
      for (std::size_t i = 0, j = rn - 1; i < rn; j = i++)
        walls += distance(ring[j], ring[i]) * s.frame.scale * (s.w1 - s.w0);
    }
    total_area += 2.0 * s.area2d * s.frame.scale * s.frame.scale + walls;
  }
  if (solids.empty() || total_area <= 0.0)
    throw EmptySolidError("sequence has no extrudable sketch");

  std::vector<detail::Candidate> kept;
  int oversample = opt.oversample;
  for (int round = 0; round < opt.max_refill_rounds; ++round) {
    std::vector<detail::Candidate> candidates;
    const std::uint64_t round_seed = derive_seed(seed, 0xface0000ULL + static_cast<std::uint64_t>(round));
    for (std::size_t si = 0; si < solids.size(); ++si) {
      const auto& s = solids[si];
      if (s.degenerate()) continue;
      double walls = 0.0;
      for (const auto& ring : s.region.rings) {
        const std::size_t rn = ring.size();
        for (std::size_t i = 0, j = rn - 1; i < rn; j = i++)
          walls += distance(ring[j], ring[i]) * s.frame.scale * (s.w1 - s.w0);
      }
      const double area = 2.0 * s.area2d * s.frame.scale * s.frame.scale + walls;
      const int target = static_cast<int>(
          std::round(static_cast<double>(n) * oversample * area / total_area));
      detail::sample_solid_candidates(s, static_cast<int>(si), target, round_seed, candidates);
    }

    kept.clear();
    for (const auto& c : candidates) {
      bool plus = false, minus = false;
      detail::fold_membership(solids, c.position, opt.csg_tol, plus, minus);
      if (plus && !minus) kept.push_back(c);
    }
    if (stats) {
      stats->candidates = static_cast<int>(candidates.size());
      stats->kept = static_cast<int>(kept.size());
      stats->rounds = round + 1;
    }
    if (static_cast<int>(kept.size()) >= n || round + 1 == opt.max_refill_rounds) break;
    oversample *= 2;
  }
  if (kept.empty()) throw EmptySolidError("no boundary points survive CSG filtering");

  PointCloud pc;
  pc.points.reserve(static_cast<std::size_t>(n));
  pc.normals.reserve(static_cast<std::size_t>(n));
  Rng pick(derive_seed(seed, 0xd0f4ULL));
  if (static_cast<int>(kept.size()) > n) {
    // partial Fisher-Yates: uniform choice of n distinct candidates
    std::vector<int> idx(kept.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(
          pick.uniform_int(i, static_cast<std::int64_t>(kept.size()) - 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());  // keep candidate order for stability
    for (const int i : idx) {
      const auto& c = kept[static_cast<std::size_t>(i)];
      const bool flip = solids[static_cast<std::size_t>(c.solid)].op == BooleanOp::Cut;
      pc.points.push_back(c.position);
      pc.normals.push_back(flip ? c.normal * -1.0 : c.normal);
    }
  } else {
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      const auto& c = kept[i % kept.size()];  // undersupply: repeat survivors
      const bool flip = solids[static_cast<std::size_t>(c.solid)].op == BooleanOp::Cut;
      pc.points.push_back(c.position);
      pc.normals.push_back(flip ? c.normal * -1.0 : c.normal);
    }
  }

  if (opt.normalize) {
    Vec3 lo = pc.points.front(), hi = pc.points.front();
    for (const auto& p : pc.points) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    const Vec3 center = (lo + hi) * 0.5;
    const double half = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z}) * 0.5;
    const double scale = half > 0.0 ? 0.5 / half : 1.0;
    for (auto& p : pc.points) p = (p - center) * scale;
  }
  return pc;
}

}  // namespace transcad
