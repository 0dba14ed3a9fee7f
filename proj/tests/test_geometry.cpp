#include <catch2/catch_amalgamated.hpp>

#include "transcad/tessellate.hpp"

using namespace transcad;

namespace {

Loop unit_square() {
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::line({0, 0}, {1, 0}));
  loop.primitives.push_back(PrimitiveDelta::line({1, 0}, {1, 1}));
  loop.primitives.push_back(PrimitiveDelta::line({1, 1}, {0, 1}));
  loop.primitives.push_back(PrimitiveDelta::line({0, 1}, {0, 0}));
  return loop;
}

}  // namespace

TEST_CASE("line loops tessellate verbatim") {
  const auto poly = tessellate_loop(unit_square());
  REQUIRE(poly.size() == 4);
  CHECK(poly[0] == Vec2{0, 0});
  CHECK(poly[1] == Vec2{1, 0});
  CHECK(poly[2] == Vec2{1, 1});
  CHECK(poly[3] == Vec2{0, 1});
}

TEST_CASE("full circle tessellates to a 64-gon on the circle") {
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::circle({0.5, 0.5}, 0.25));
  const auto poly = tessellate_loop(loop);
  REQUIRE(poly.size() == 64);
  for (const auto& p : poly) {
    CHECK(distance(p, {0.5, 0.5}) == Catch::Approx(0.25).margin(1e-9));
  }
}

TEST_CASE("semicircular arc spans 32 segments") {
  // semicircle from (0,0) to (1,0) through (0.5,0.5): span pi
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::arc({0, 0}, {0.5, 0.5}, {1, 0}));
  loop.primitives.push_back(PrimitiveDelta::line({1, 0}, {0, 0}));
  const auto poly = tessellate_loop(loop);
  // 32 arc vertices (excluding the arc end) + 1 line vertex
  CHECK(poly.size() == 33);
}

TEST_CASE("open loops refuse to tessellate") {
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::line({0, 0}, {1, 0}));
  loop.primitives.push_back(PrimitiveDelta::line({1, 0}, {0.8, 0.9}));
  CHECK_THROWS_AS(tessellate_loop(loop), OpenLoopError);
}

TEST_CASE("even-odd membership with boundary inclusion") {
  const auto square = tessellate_loop(unit_square());
  CHECK(point_in_loop({0.5, 0.5}, square));
  CHECK_FALSE(point_in_loop({2, 2}, square));
  // boundary points count as inside
  CHECK(point_in_loop({0.5, 0.0}, square));

  Loop circle;
  circle.primitives.push_back(PrimitiveDelta::circle({0.5, 0.5}, 0.25));
  const auto poly = tessellate_loop(circle);
  // inside the inscribed tessellation by more than the chord sagitta
  CHECK(point_in_loop({0.5 + 0.249, 0.5}, poly));
}

TEST_CASE("sketch regions handle islands and holes") {
  // annulus: outer circle with an inner hole
  Loop outer;
  outer.primitives.push_back(PrimitiveDelta::circle({0.5, 0.5}, 0.4));
  Loop inner;
  inner.primitives.push_back(PrimitiveDelta::circle({0.5, 0.5}, 0.2));
  const auto region = build_region({outer, inner});
  CHECK(region.contains_eo({0.5 + 0.3, 0.5}));       // in the ring
  CHECK_FALSE(region.contains_eo({0.5, 0.5}));       // in the hole
  CHECK_FALSE(region.contains_eo({0.95, 0.95}));     // outside
  const double expected = M_PI * (0.4 * 0.4 - 0.2 * 0.2);
  CHECK(region.area() == Catch::Approx(expected).epsilon(0.01));
}

TEST_CASE("polygon area signs normalize by nesting depth") {
  const auto square = tessellate_loop(unit_square());
  SketchRegion region;
  region.rings.push_back(square);
  CHECK(region.area() == Catch::Approx(1.0));
}
