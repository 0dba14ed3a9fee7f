#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "transcad/perturb.hpp"
#include "transcad/surface_sampler.hpp"

using namespace transcad;

namespace {

CadSequence box_sequence() {
  CadSequence seq;
  Step step;
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::line({0, 0}, {1, 0}));
  loop.primitives.push_back(PrimitiveDelta::line({1, 0}, {1, 1}));
  loop.primitives.push_back(PrimitiveDelta::line({1, 1}, {0, 1}));
  loop.primitives.push_back(PrimitiveDelta::line({0, 1}, {0, 0}));
  step.loops.push_back(loop);
  Extrusion e;
  e.orientation = {0.5, 0.5, 0.5};
  e.origin = {0.5, 0.5, 0.5};
  e.scale = 0.5;
  e.distances = {0.7, 0.0};
  step.extrusion = e;
  seq.steps.push_back(step);
  return seq;
}

}  // namespace

TEST_CASE("perlin noise vanishes on the integer lattice") {
  const Perlin3 gen(42);
  for (int x = -2; x <= 2; ++x)
    for (int y = -2; y <= 2; ++y)
      for (int z = -2; z <= 2; ++z)
        CHECK(gen.noise(x, y, z) == Catch::Approx(0.0).margin(1e-12));
  // multi-octave sums stay zero there too (all octaves hit lattice points)
  NoiseSpec spec;
  spec.seed = 42;
  CHECK(perlin3({1.0, -2.0, 3.0}, spec) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("perlin noise is deterministic and bounded") {
  NoiseSpec spec;
  spec.seed = 9;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vec3 q{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double a = perlin3(q, spec);
    const double b = perlin3(q, spec);
    CHECK(a == b);
    CHECK(std::abs(a) <= 1.0);
  }
}

TEST_CASE("perlin noise is continuous (finite-difference Lipschitz sweep)") {
  // The 64-octave sum has a large but finite slope: each octave contributes
  // amplitude*frequency = 1 per unit, so the bound is about the octave count
  // times the single-octave slope. The frozen constant is an empirical sweep
  // maximum with 2x headroom.
  const double kEmpiricalLipschitz = 500.0;
  const Perlin3 gen(11);
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const Vec3 d = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()}) * 1e-5;
    const double a = gen.fbm(q, 64);
    const double b = gen.fbm(q + d, 64);
    CHECK(std::abs(a - b) <= kEmpiricalLipschitz * norm(d));
  }
}

TEST_CASE("apply_noise displaces along normals within the amplitude bound") {
  const auto pc = sample_surface(box_sequence(), 2048, 77);
  NoiseSpec spec;
  spec.seed = 13;
  const auto noisy = apply_noise(pc, spec);
  REQUIRE(noisy.size() == pc.size());
  double max_disp = 0.0;
  for (std::size_t i = 0; i < pc.size(); ++i)
    max_disp = std::max(max_disp, distance(noisy.points[i], pc.points[i]));
  CHECK(max_disp <= spec.amplitude + 1e-12);
  CHECK(max_disp > 0.0);

  // zero amplitude is the identity (normals untouched as well)
  NoiseSpec zero;
  zero.amplitude = 0.0;
  CHECK(apply_noise(pc, zero) == pc);

  // determinism
  CHECK(apply_noise(pc, spec) == noisy);
}

TEST_CASE("punch_holes removes geodesic balls and respects the floor") {
  const auto pc = sample_surface(box_sequence(), 8192, 3);
  HoleSpec spec;
  spec.seed = 21;
  spec.min_remaining = 4096;
  const auto result = punch_holes(pc, spec);
  CHECK(result.cloud.size() + result.removed.size() == pc.size());
  CHECK(result.cloud.size() >= 4096);
  // output is a subset of the input in order
  std::set<int> removed(result.removed.begin(), result.removed.end());
  std::size_t cursor = 0;
  for (int i = 0; i < static_cast<int>(pc.size()); ++i) {
    if (removed.count(i)) continue;
    REQUIRE(cursor < result.cloud.size());
    CHECK(result.cloud.points[cursor] == pc.points[static_cast<std::size_t>(i)]);
    ++cursor;
  }
  // determinism
  const auto again = punch_holes(pc, spec);
  CHECK(again.removed == result.removed);
}

TEST_CASE("single forced hole removes round(ratio * n) points") {
  const auto pc = sample_surface(box_sequence(), 8192, 3);
  HoleSpec spec;
  spec.seed = 5;
  spec.max_holes = 1;
  spec.ratio_std = 0.0;  // ratio exactly 0.03
  spec.min_remaining = 4096;
  const auto result = punch_holes(pc, spec);
  // round(0.03 * 8192) = 246
  CHECK(result.removed.size() == 246);

  // zero ratio is the identity
  HoleSpec zero = spec;
  zero.ratio_mean = 0.0;
  const auto none = punch_holes(pc, zero);
  CHECK(none.removed.empty());
  CHECK(none.cloud == pc);
}

TEST_CASE("punch_holes refuses undersized clouds") {
  PointCloud tiny;
  tiny.points = {{0, 0, 0}};
  tiny.normals = {{0, 0, 1}};
  HoleSpec spec;
  CHECK_THROWS_AS(punch_holes(tiny, spec), InsufficientPointsError);
}
