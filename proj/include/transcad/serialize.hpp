#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "transcad/cad.hpp"
#include "transcad/errors.hpp"
#include "transcad/vec3.hpp"

namespace transcad {

using Json = nlohmann::json;

// Canonical float formatting: 9 significant digits. Values are rounded at
// write time so that parse(serialize(x)) == x holds for canonical sequences.
inline double round_sig9(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

namespace detail {

inline Json point_json(const Vec2& p) { return Json::array({round_sig9(p.x), round_sig9(p.y)}); }

inline BooleanOp boolean_op_from_string(const std::string& s) {
  if (s == "new") return BooleanOp::New;
  if (s == "join") return BooleanOp::Join;
  if (s == "cut") return BooleanOp::Cut;
  if (s == "intersect") return BooleanOp::Intersect;
  throw ParseError("unknown boolean_op '" + s + "'");
}

inline ExtentType extent_from_string(const std::string& s) {
  if (s == "one_sided") return ExtentType::OneSided;
  if (s == "symmetric") return ExtentType::Symmetric;
  if (s == "two_sided") return ExtentType::TwoSided;
  throw ParseError("unknown extent '" + s + "'");
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing key '" + std::string(key) + "' in " + where);
  return *it;
}

inline Vec2 parse_point(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError("expected [x, y] point in " + where);
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline Json to_json(const CadSequence& seq) {
  Json root;
  root["quantization"] = Json{{"bins", seq.quantization.bins}};
  Json steps = Json::array();
  for (const auto& step : seq.steps) {
    Json js;
    Json loops = Json::array();
    for (const auto& loop : step.loops) {
      Json prims = Json::array();
      for (const auto& p : loop.primitives) {
        Json jp;
        jp["start"] = detail::point_json(p.start);
        jp["mid"] = p.mid_is_sentinel() ? Json(nullptr) : detail::point_json(p.mid);
        jp["end"] = detail::point_json(p.end);
        prims.push_back(std::move(jp));
      }
      loops.push_back(Json{{"primitives", std::move(prims)}});
    }
    js["loops"] = std::move(loops);
    if (step.extrusion) {
      const auto& e = *step.extrusion;
      Json je;
      je["orientation"] = Json::array({round_sig9(e.orientation[0]), round_sig9(e.orientation[1]),
                                       round_sig9(e.orientation[2])});
      je["origin"] =
          Json::array({round_sig9(e.origin[0]), round_sig9(e.origin[1]), round_sig9(e.origin[2])});
      je["scale"] = round_sig9(e.scale);
      je["distances"] = Json::array({round_sig9(e.distances[0]), round_sig9(e.distances[1])});
      je["boolean_op"] = to_string(e.boolean_op);
      je["extent"] = to_string(e.extent);
      js["extrusion"] = std::move(je);
    } else {
      js["extrusion"] = nullptr;
    }
    steps.push_back(std::move(js));
  }
  root["steps"] = std::move(steps);
  return root;
}

// Canonical text: sorted keys (nlohmann objects are key-ordered maps),
// 2-space indent, 9-significant-digit floats, '\n' terminated.
inline std::string serialize(const CadSequence& seq) { return to_json(seq).dump(2) + "\n"; }

inline CadSequence sequence_from_json(const Json& root) {
  CadSequence seq;
  const auto& q = detail::require(root, "quantization", "document");
  seq.quantization.bins = detail::require(q, "bins", "quantization").get<int>();
  if (seq.quantization.bins < 2) throw ParseError("quantization.bins must be >= 2");

  const auto& steps = detail::require(root, "steps", "document");
  if (!steps.is_array()) throw ParseError("'steps' must be an array");
  int step_idx = 0;
  for (const auto& js : steps) {
    const std::string where = "steps[" + std::to_string(step_idx) + "]";
    Step step;
    const auto& loops = detail::require(js, "loops", where);
    int loop_idx = 0;
    for (const auto& jl : loops) {
      const std::string lwhere = where + ".loops[" + std::to_string(loop_idx) + "]";
      Loop loop;
      const auto& prims = detail::require(jl, "primitives", lwhere);
      for (const auto& jp : prims) {
        PrimitiveDelta p;
        p.start = detail::parse_point(detail::require(jp, "start", lwhere), lwhere);
        const auto& mid = detail::require(jp, "mid", lwhere);
        p.mid = mid.is_null() ? Vec2{kSentinelCoord, kSentinelCoord}
                              : detail::parse_point(mid, lwhere);
        p.end = detail::parse_point(detail::require(jp, "end", lwhere), lwhere);
        loop.primitives.push_back(p);
      }
      step.loops.push_back(std::move(loop));
      ++loop_idx;
    }
    const auto& je = detail::require(js, "extrusion", where);
    if (!je.is_null()) {
      Extrusion e;
      const auto& jo = detail::require(je, "orientation", where + ".extrusion");
      const auto& jg = detail::require(je, "origin", where + ".extrusion");
      const auto& jd = detail::require(je, "distances", where + ".extrusion");
      if (jo.size() != 3 || jg.size() != 3 || jd.size() != 2)
        throw ParseError("bad extrusion arrays in " + where);
      for (int i = 0; i < 3; ++i) {
        e.orientation[static_cast<std::size_t>(i)] = jo[static_cast<std::size_t>(i)].get<double>();
        e.origin[static_cast<std::size_t>(i)] = jg[static_cast<std::size_t>(i)].get<double>();
      }
      e.scale = detail::require(je, "scale", where + ".extrusion").get<double>();
      e.distances[0] = jd[0].get<double>();
      e.distances[1] = jd[1].get<double>();
      e.boolean_op = detail::boolean_op_from_string(
          detail::require(je, "boolean_op", where + ".extrusion").get<std::string>());
      e.extent = detail::extent_from_string(
          detail::require(je, "extent", where + ".extrusion").get<std::string>());
      step.extrusion = e;
    }
    seq.steps.push_back(std::move(step));
    ++step_idx;
  }
  return seq;
}

inline CadSequence deserialize(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("JSON parse error: ") + e.what());
  }
  return sequence_from_json(root);
}

inline void save_sequence(const CadSequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << serialize(seq);
}

inline CadSequence load_sequence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// DeepCAD-style import. Accepts the public dataset layout (entities +
// sequence, Line3D/Arc3D/Circle3D profile curves, extrude features) for
// axis-aligned fixtures and normalizes sketches into the [0,1]^2 domain.

namespace detail {

inline Vec3 parse_vec3(const Json& j) {
  return {j.value("x", 0.0), j.value("y", 0.0), j.value("z", 0.0)};
}

// Rotation matrix with columns (x_axis, y_axis, z_axis) -> normalized Z-Y-Z
// Euler angles in [0,1].
inline std::array<double, 3> orientation_from_axes(const Vec3& xa, const Vec3& ya,
                                                   const Vec3& za) {
  Mat3 r;
  r(0, 0) = xa.x; r(1, 0) = xa.y; r(2, 0) = xa.z;
  r(0, 1) = ya.x; r(1, 1) = ya.y; r(2, 1) = ya.z;
  r(0, 2) = za.x; r(1, 2) = za.y; r(2, 2) = za.z;
  double a, b, c;  // R = Rz(a) * Ry(b) * Rz(c)
  const double cb = std::clamp(r(2, 2), -1.0, 1.0);
  b = std::acos(cb);
  if (std::abs(std::sin(b)) > 1e-9) {
    a = std::atan2(r(1, 2), r(0, 2));
    c = std::atan2(r(2, 1), -r(2, 0));
  } else {
    a = std::atan2(r(1, 0), r(0, 0));
    c = 0.0;
    if (cb < 0.0) a = -a;
  }
  auto to01 = [](double ang) { return std::clamp((ang / M_PI + 1.0) / 2.0, 0.0, 1.0); };
  return {to01(a), to01(b), to01(c)};
}

}  // namespace detail

inline CadSequence from_deepcad_json(const Json& root) {
  CadSequence seq;
  const auto& entities = detail::require(root, "entities", "deepcad document");
  const auto& order = detail::require(root, "sequence", "deepcad document");

  struct RawSketch {
    std::vector<Loop> loops;     // in raw sketch coordinates
    Aabb2 bbox;
    Vec3 origin;                 // sketch plane origin in 3D
    std::array<double, 3> orientation{0.5, 0.5, 0.5};
  };
  std::map<std::string, RawSketch> sketches;

  for (const auto& item : order) {
    const std::string type = detail::require(item, "type", "sequence item").get<std::string>();
    const std::string key = detail::require(item, "entity", "sequence item").get<std::string>();
    const auto eit = entities.find(key);
    if (eit == entities.end()) throw ParseError("sequence references unknown entity '" + key + "'");
    const Json& ent = *eit;

    if (type == "Sketch") {
      RawSketch sk;
      const auto& transform = detail::require(ent, "transform", "sketch " + key);
      sk.origin = detail::parse_vec3(detail::require(transform, "origin", "sketch transform"));
      sk.orientation = detail::orientation_from_axes(
          detail::parse_vec3(detail::require(transform, "x_axis", "sketch transform")),
          detail::parse_vec3(detail::require(transform, "y_axis", "sketch transform")),
          detail::parse_vec3(detail::require(transform, "z_axis", "sketch transform")));
      const auto& profiles = detail::require(ent, "profiles", "sketch " + key);
      for (const auto& [pid, profile] : profiles.items()) {
        for (const auto& jloop : detail::require(profile, "loops", "profile " + pid)) {
          Loop loop;
          for (const auto& jc : detail::require(jloop, "profile_curves", "profile " + pid)) {
            const std::string ct = detail::require(jc, "type", "profile curve").get<std::string>();
            auto pt2 = [](const Json& j) {
              const Vec3 v = detail::parse_vec3(j);
              return Vec2{v.x, v.y};
            };
            if (ct == "Line3D") {
              loop.primitives.push_back(PrimitiveDelta::line(
                  pt2(detail::require(jc, "start_point", "Line3D")),
                  pt2(detail::require(jc, "end_point", "Line3D"))));
            } else if (ct == "Circle3D") {
              const Vec2 c = pt2(detail::require(jc, "center_point", "Circle3D"));
              const double r = detail::require(jc, "radius", "Circle3D").get<double>();
              loop.primitives.push_back(PrimitiveDelta::circle(c, r));
            } else if (ct == "Arc3D") {
              const Vec2 c = pt2(detail::require(jc, "center_point", "Arc3D"));
              const Vec2 a = pt2(detail::require(jc, "start_point", "Arc3D"));
              const Vec2 b = pt2(detail::require(jc, "end_point", "Arc3D"));
              const double r = 0.5 * (distance(a, c) + distance(b, c));
              double a0 = std::atan2(a.y - c.y, a.x - c.x);
              double a1 = std::atan2(b.y - c.y, b.x - c.x);
              if (a1 <= a0) a1 += 2.0 * M_PI;  // CCW sweep
              const double am = 0.5 * (a0 + a1);
              loop.primitives.push_back(PrimitiveDelta::arc(
                  a, {c.x + r * std::cos(am), c.y + r * std::sin(am)}, b));
            } else {
              throw ParseError("unsupported profile curve type '" + ct + "'");
            }
          }
          for (const auto& p : loop.primitives) {
            sk.bbox.extend(p.start);
            sk.bbox.extend(p.end);
            if (!p.mid_is_sentinel()) sk.bbox.extend(p.mid);
          }
          sk.loops.push_back(std::move(loop));
        }
      }
      sketches[key] = std::move(sk);
    } else if (type == "ExtrudeFeature") {
      Step step;
      Extrusion e;
      const auto& profs = detail::require(ent, "profiles", "extrude " + key);
      if (profs.empty()) throw ParseError("extrude feature without profiles");
      const std::string sk_key =
          detail::require(profs[0], "sketch", "extrude profile").get<std::string>();
      const auto sit = sketches.find(sk_key);
      if (sit == sketches.end()) throw ParseError("extrude references unknown sketch '" + sk_key + "'");
      const RawSketch& sk = sit->second;

      // normalize sketch coordinates into [0,1]^2, centered
      const double span = std::max({sk.bbox.width(), sk.bbox.height(), 1e-9});
      const Vec2 center{0.5 * (sk.bbox.lo.x + sk.bbox.hi.x), 0.5 * (sk.bbox.lo.y + sk.bbox.hi.y)};
      auto map2 = [&](Vec2 p) {
        return Vec2{(p.x - center.x) / span + 0.5, (p.y - center.y) / span + 0.5};
      };
      for (const auto& raw : sk.loops) {
        Loop loop;
        for (const auto& prim : raw.primitives) {
          PrimitiveDelta p = prim;
          p.start = map2(p.start);
          p.end = map2(p.end);
          if (!p.mid_is_sentinel()) p.mid = map2(p.mid);
          loop.primitives.push_back(p);
        }
        step.loops.push_back(std::move(loop));
      }

      e.orientation = sk.orientation;
      // world mapping is origin = 2o-1, scale = 2s (see frame.hpp)
      auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
      e.origin = {clamp01((sk.origin.x + 1.0) / 2.0), clamp01((sk.origin.y + 1.0) / 2.0),
                  clamp01((sk.origin.z + 1.0) / 2.0)};
      e.scale = clamp01(span / 2.0);

      const std::string op =
          ent.value("operation", std::string("NewBodyFeatureOperation"));
      if (op == "NewBodyFeatureOperation") e.boolean_op = BooleanOp::New;
      else if (op == "JoinFeatureOperation") e.boolean_op = BooleanOp::Join;
      else if (op == "CutFeatureOperation") e.boolean_op = BooleanOp::Cut;
      else if (op == "IntersectFeatureOperation") e.boolean_op = BooleanOp::Intersect;
      else throw ParseError("unknown extrude operation '" + op + "'");

      const std::string ext = ent.value("extent_type", std::string("OneSideFeatureExtentType"));
      if (ext == "OneSideFeatureExtentType") e.extent = ExtentType::OneSided;
      else if (ext == "SymmetricFeatureExtentType") e.extent = ExtentType::Symmetric;
      else if (ext == "TwoSidesFeatureExtentType") e.extent = ExtentType::TwoSided;
      else throw ParseError("unknown extent type '" + ext + "'");

      auto extent_distance = [&](const char* field) {
        const auto it = ent.find(field);
        if (it == ent.end() || it->is_null()) return 0.0;
        const auto d = it->find("distance");
        if (d == it->end()) return 0.0;
        return std::abs(d->value("value", 0.0));
      };
      e.distances[0] = clamp01(extent_distance("extent_one"));
      e.distances[1] =
          e.extent == ExtentType::TwoSided ? clamp01(extent_distance("extent_two")) : 0.0;

      step.extrusion = e;
      seq.steps.push_back(std::move(step));
    }
  }
  if (seq.steps.empty()) throw ParseError("deepcad document yields an empty sequence");
  return seq;
}

inline CadSequence from_deepcad_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("JSON parse error: ") + e.what());
  }
  return from_deepcad_json(root);
}

}  // namespace transcad
