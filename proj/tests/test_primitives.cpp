#include <catch2/catch_amalgamated.hpp>

#include "transcad/cad.hpp"

using namespace transcad;

TEST_CASE("sentinel mid means line") {
  const auto line = PrimitiveDelta::line({0, 0}, {1, 0});
  CHECK(infer_primitive_type(line) == PrimitiveType::Line);
}

TEST_CASE("coincident endpoints mean circle") {
  // point on circle (0.75, 0.5), diametrically opposite (0.25, 0.5):
  // center (0.5, 0.5), radius 0.25
  const PrimitiveDelta d{{0.75, 0.5}, {0.25, 0.5}, {0.75, 0.5}};
  CHECK(infer_primitive_type(d) == PrimitiveType::Circle);
  Vec2 center;
  double radius = 0.0;
  circle_geometry(d, center, radius);
  CHECK(center.x == Catch::Approx(0.5));
  CHECK(center.y == Catch::Approx(0.5));
  CHECK(radius == Catch::Approx(0.25));
}

TEST_CASE("three distinct points mean arc") {
  const PrimitiveDelta d{{0, 0}, {0.5, 0.5}, {1, 0}};
  CHECK(infer_primitive_type(d) == PrimitiveType::Arc);
  Vec2 center;
  double radius = 0.0;
  REQUIRE(circumcircle(d.start, d.mid, d.end, center, radius));
  CHECK(center.x == Catch::Approx(0.5));
  CHECK(center.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(radius == Catch::Approx(0.5));
}

TEST_CASE("collinear arcs reclassify as lines") {
  const PrimitiveDelta d{{0, 0}, {0.5, 0.5}, {1, 1}};
  CHECK(infer_primitive_type(d) == PrimitiveType::Line);
}

TEST_CASE("zero-length line is malformed") {
  const auto d = PrimitiveDelta::line({0.3, 0.3}, {0.3, 0.3});
  CHECK(!classify_primitive(d).has_value());
  CHECK_THROWS_AS(infer_primitive_type(d), MalformedPrimitiveError);
}

TEST_CASE("stray sentinel coordinates are malformed") {
  PrimitiveDelta d{{kSentinelCoord, 0.2}, {0.5, 0.5}, {1, 0}};
  CHECK(!classify_primitive(d).has_value());
  PrimitiveDelta half_mid{{0, 0}, {kSentinelCoord, 0.5}, {1, 0}};
  CHECK(!classify_primitive(half_mid).has_value());
}
