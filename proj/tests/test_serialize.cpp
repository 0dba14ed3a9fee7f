#include <catch2/catch_amalgamated.hpp>

#include "transcad/generator.hpp"
#include "transcad/serialize.hpp"

using namespace transcad;

TEST_CASE("serialize/deserialize is the identity on generator output") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto seq = generate_random_sequence(seed);
    const std::string text = serialize(seq);
    const auto back = deserialize(text);
    CHECK(back == seq);
    // byte-stable canonical output
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("missing keys are named in parse errors") {
  const auto seq = generate_random_sequence(3);
  auto j = to_json(seq);
  j["steps"][0].erase("extrusion");
  try {
    sequence_from_json(j);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("extrusion") != std::string::npos);
  }
}

TEST_CASE("sentinel midpoints serialize as null") {
  CadSequence seq;
  Step step;
  Loop loop;
  loop.primitives.push_back(PrimitiveDelta::line({0, 0}, {1, 0}));
  loop.primitives.push_back(PrimitiveDelta::arc({1, 0}, {0.9, 0.6}, {0, 0}));
  step.loops.push_back(loop);
  step.extrusion = Extrusion{};
  seq.steps.push_back(step);
  const auto j = to_json(seq);
  CHECK(j["steps"][0]["loops"][0]["primitives"][0]["mid"].is_null());
  CHECK(j["steps"][0]["loops"][0]["primitives"][1]["mid"].is_array());
  CHECK(deserialize(serialize(seq)) == seq);
}

TEST_CASE("deepcad-style export imports to a valid sequence") {
  // hand-built fixture following the public dataset layout
  const char* text = R"JSON({
    "entities": {
      "sketch1": {
        "type": "Sketch",
        "profiles": {
          "p0": {
            "loops": [
              {
                "profile_curves": [
                  {"type": "Line3D", "start_point": {"x": 0.0, "y": 0.0, "z": 0.0},
                   "end_point": {"x": 2.0, "y": 0.0, "z": 0.0}},
                  {"type": "Line3D", "start_point": {"x": 2.0, "y": 0.0, "z": 0.0},
                   "end_point": {"x": 2.0, "y": 1.0, "z": 0.0}},
                  {"type": "Line3D", "start_point": {"x": 2.0, "y": 1.0, "z": 0.0},
                   "end_point": {"x": 0.0, "y": 1.0, "z": 0.0}},
                  {"type": "Line3D", "start_point": {"x": 0.0, "y": 1.0, "z": 0.0},
                   "end_point": {"x": 0.0, "y": 0.0, "z": 0.0}}
                ]
              }
            ]
          }
        },
        "transform": {
          "origin": {"x": 0.0, "y": 0.0, "z": 0.0},
          "x_axis": {"x": 1.0, "y": 0.0, "z": 0.0},
          "y_axis": {"x": 0.0, "y": 1.0, "z": 0.0},
          "z_axis": {"x": 0.0, "y": 0.0, "z": 1.0}
        }
      },
      "ext1": {
        "type": "ExtrudeFeature",
        "profiles": [{"sketch": "sketch1", "profile": "p0"}],
        "operation": "NewBodyFeatureOperation",
        "extent_type": "OneSideFeatureExtentType",
        "extent_one": {"distance": {"value": 0.5}},
        "extent_two": null
      }
    },
    "sequence": [
      {"index": 0, "type": "Sketch", "entity": "sketch1"},
      {"index": 1, "type": "ExtrudeFeature", "entity": "ext1"}
    ]
  })JSON";
  const auto seq = from_deepcad_text(text);
  REQUIRE(seq.steps.size() == 1);
  REQUIRE(seq.steps[0].loops.size() == 1);
  CHECK(seq.steps[0].loops[0].primitives.size() == 4);
  CHECK(validate(seq).valid);
  // sketch normalized into [0,1]^2
  for (const auto& p : seq.steps[0].loops[0].primitives) {
    CHECK(p.start.x >= 0.0);
    CHECK(p.start.x <= 1.0);
    CHECK(p.start.y >= 0.0);
    CHECK(p.start.y <= 1.0);
  }
  CHECK(seq.steps[0].extrusion->distances[0] == Catch::Approx(0.5));
}

TEST_CASE("malformed json raises a parse error") {
  CHECK_THROWS_AS(deserialize("{not json"), ParseError);
  CHECK_THROWS_AS(deserialize("{}"), ParseError);
}
