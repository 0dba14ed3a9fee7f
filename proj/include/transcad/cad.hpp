#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "transcad/errors.hpp"
#include "transcad/geom2d.hpp"
#include "transcad/quantize.hpp"

namespace transcad {

// Desk-scale sequence limits: token expansion is capped at kLMax and each
// loop holds at most kNpMax primitive slots in the fixed network layout.
constexpr int kLMax = 24;
constexpr int kNpMax = 8;

// Tolerances in continuous [0,1] sketch units.
constexpr double kEpsClose = 1e-6;
constexpr double kEpsCollinear = 1e-6;

enum class PrimitiveType { Line, Arc, Circle };

inline const char* to_string(PrimitiveType t) {
  switch (t) {
    case PrimitiveType::Line: return "line";
    case PrimitiveType::Arc: return "arc";
    case PrimitiveType::Circle: return "circle";
  }
  return "?";
}

// One curve segment as start/mid/end points in [0,1]^2. The type is never
// stored; it is deduced from the point configuration:
//   - line:   mid is the sentinel (-1,-1)
//   - circle: start == end, mid is the diametrically opposite point
//   - arc:    three distinct points on the circumcircle
struct PrimitiveDelta {
  Vec2 start;
  Vec2 mid;
  Vec2 end;

  bool mid_is_sentinel() const { return is_sentinel(mid.x) && is_sentinel(mid.y); }

  std::array<double, 6> flat() const { return {start.x, start.y, mid.x, mid.y, end.x, end.y}; }

  static PrimitiveDelta line(Vec2 a, Vec2 b) {
    return {a, {kSentinelCoord, kSentinelCoord}, b};
  }
  static PrimitiveDelta arc(Vec2 a, Vec2 m, Vec2 b) { return {a, m, b}; }
  static PrimitiveDelta circle(Vec2 center, double radius) {
    const Vec2 on{center.x + radius, center.y};
    const Vec2 opposite{center.x - radius, center.y};
    return {on, opposite, on};
  }

  bool operator==(const PrimitiveDelta&) const = default;
};

// Non-throwing classifier; nullopt marks a malformed configuration
// (zero-length line, NaN, or a stray sentinel in start/end or half of mid).
inline std::optional<PrimitiveType> classify_primitive(const PrimitiveDelta& d) {
  const auto bad = [](double v) { return !std::isfinite(v); };
  if (bad(d.start.x) || bad(d.start.y) || bad(d.end.x) || bad(d.end.y) || bad(d.mid.x) ||
      bad(d.mid.y))
    return std::nullopt;
  if (is_sentinel(d.start.x) || is_sentinel(d.start.y) || is_sentinel(d.end.x) ||
      is_sentinel(d.end.y))
    return std::nullopt;
  const bool mx = is_sentinel(d.mid.x), my = is_sentinel(d.mid.y);
  if (mx != my) return std::nullopt;
  if (mx && my) {
    if (distance(d.start, d.end) <= kEpsClose) return std::nullopt;  // zero-length line
    return PrimitiveType::Line;
  }
  if (distance(d.start, d.end) <= kEpsClose) return PrimitiveType::Circle;
  // collinear "arcs" reclassify as lines to avoid the circumcenter singularity
  if (point_segment_distance(d.mid, d.start, d.end) <= kEpsCollinear) return PrimitiveType::Line;
  return PrimitiveType::Arc;
}

inline PrimitiveType infer_primitive_type(const PrimitiveDelta& d) {
  const auto t = classify_primitive(d);
  if (!t) throw MalformedPrimitiveError("malformed primitive configuration");
  return *t;
}

// Center/radius for circle-encoded primitives (start on circle, mid
// diametrically opposite).
inline void circle_geometry(const PrimitiveDelta& d, Vec2& center, double& radius) {
  center = (d.start + d.mid) * 0.5;
  radius = 0.5 * distance(d.start, d.mid);
}

struct Loop {
  std::vector<PrimitiveDelta> primitives;

  bool operator==(const Loop&) const = default;
};

enum class BooleanOp { New, Join, Cut, Intersect };
enum class ExtentType { OneSided, Symmetric, TwoSided };

inline const char* to_string(BooleanOp op) {
  switch (op) {
    case BooleanOp::New: return "new";
    case BooleanOp::Join: return "join";
    case BooleanOp::Cut: return "cut";
    case BooleanOp::Intersect: return "intersect";
  }
  return "?";
}

inline const char* to_string(ExtentType e) {
  switch (e) {
    case ExtentType::OneSided: return "one_sided";
    case ExtentType::Symmetric: return "symmetric";
    case ExtentType::TwoSided: return "two_sided";
  }
  return "?";
}

// 11 scalar slots when flattened: orientation (3), origin (3), scale (1),
// distances (2), boolean op (1), extent type (1). The continuous fields are
// normalized to [0,1]; the world mapping lives in frame.hpp.
struct Extrusion {
  std::array<double, 3> orientation{0.5, 0.5, 0.5};
  std::array<double, 3> origin{0.5, 0.5, 0.5};
  double scale = 0.5;
  std::array<double, 2> distances{0.5, 0.0};
  BooleanOp boolean_op = BooleanOp::New;
  ExtentType extent = ExtentType::OneSided;

  // Categorical slots embedded at evenly spaced values so the 11-vector can
  // enter an exponential-decay score as one Euclidean norm.
  std::array<double, 11> flat_continuous() const {
    return {orientation[0],
            orientation[1],
            orientation[2],
            origin[0],
            origin[1],
            origin[2],
            scale,
            distances[0],
            distances[1],
            static_cast<double>(boolean_op) / 3.0,
            static_cast<double>(extent) / 2.0};
  }

  // Continuous slots quantized to bins, categorical slots as raw class ids.
  std::array<int, 11> quantized(const QuantizationSpec& spec = {}) const {
    std::array<int, 11> q{};
    const auto f = flat_continuous();
    for (int i = 0; i < 9; ++i) q[static_cast<std::size_t>(i)] = quantize(f[static_cast<std::size_t>(i)], spec);
    q[9] = static_cast<int>(boolean_op);
    q[10] = static_cast<int>(extent);
    return q;
  }

  bool operator==(const Extrusion&) const = default;
};

// One sketch-extrusion construction step. A well-formed step has >= 1 loop
// and an extrusion; the optional extrusion exists so that degenerate
// predictions (trailing loops with no extrusion token) stay representable.
struct Step {
  std::vector<Loop> loops;
  std::optional<Extrusion> extrusion;

  bool operator==(const Step&) const = default;
};

struct CadSequence {
  std::vector<Step> steps;
  QuantizationSpec quantization{};

  int loop_count() const {
    int n = 0;
    for (const auto& s : steps) n += static_cast<int>(s.loops.size());
    return n;
  }
  int extrusion_count() const {
    int n = 0;
    for (const auto& s : steps) n += s.extrusion ? 1 : 0;
    return n;
  }
  int primitive_count() const {
    int n = 0;
    for (const auto& s : steps)
      for (const auto& l : s.loops) n += static_cast<int>(l.primitives.size());
    return n;
  }

  std::vector<const Loop*> all_loops() const {
    std::vector<const Loop*> out;
    for (const auto& s : steps)
      for (const auto& l : s.loops) out.push_back(&l);
    return out;
  }
  std::vector<const Extrusion*> all_extrusions() const {
    std::vector<const Extrusion*> out;
    for (const auto& s : steps)
      if (s.extrusion) out.push_back(&*s.extrusion);
    return out;
  }

  bool operator==(const CadSequence&) const = default;
};

enum class TokenType { Loop, Extrusion, Eos };

inline const char* to_string(TokenType t) {
  switch (t) {
    case TokenType::Loop: return "L";
    case TokenType::Extrusion: return "E";
    case TokenType::Eos: return "EOS";
  }
  return "?";
}

inline int token_count(const CadSequence& seq) {
  return seq.loop_count() + seq.extrusion_count() + 1;  // + EOS
}

// One Loop token per loop, one Extrusion token after each sketch's loops,
// one EOS, then EOS padding up to l_max.
inline std::vector<TokenType> tokenize(const CadSequence& seq, int l_max = kLMax) {
  std::vector<TokenType> tokens;
  for (const auto& s : seq.steps) {
    for (std::size_t i = 0; i < s.loops.size(); ++i) tokens.push_back(TokenType::Loop);
    if (s.extrusion) tokens.push_back(TokenType::Extrusion);
  }
  tokens.push_back(TokenType::Eos);
  if (static_cast<int>(tokens.size()) > l_max)
    throw TokenOverflowError("token expansion exceeds L_max = " + std::to_string(l_max));
  tokens.resize(static_cast<std::size_t>(l_max), TokenType::Eos);
  return tokens;
}

enum class FailureCode {
  NoExtrusionToken,
  SingleLineLoop,
  OpenLoop,
  MalformedPrimitive,
  ZeroVolume,
  TokenOverflow,
};

inline const char* to_string(FailureCode c) {
  switch (c) {
    case FailureCode::NoExtrusionToken: return "no_extrusion_token";
    case FailureCode::SingleLineLoop: return "single_line_loop";
    case FailureCode::OpenLoop: return "open_loop";
    case FailureCode::MalformedPrimitive: return "malformed_primitive";
    case FailureCode::ZeroVolume: return "zero_volume";
    case FailureCode::TokenOverflow: return "token_overflow";
  }
  return "?";
}

struct ValidityReport {
  bool valid = true;
  std::vector<FailureCode> failure_codes;

  bool has(FailureCode c) const {
    for (const auto f : failure_codes)
      if (f == c) return true;
    return false;
  }
};

inline bool loop_is_closed(const Loop& loop, double eps = kEpsClose) {
  const auto& p = loop.primitives;
  if (p.empty()) return false;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (distance(p[i].end, p[i + 1].start) > eps) return false;
  }
  return distance(p.back().end, p.front().start) <= eps;
}

// Rule-based validity. Geometric reconstructability beyond these rules
// (e.g. a cut that eats the whole solid) surfaces later as EmptySolidError.
inline ValidityReport validate(const CadSequence& seq) {
  ValidityReport report;
  auto flag = [&report](FailureCode c) {
    if (!report.has(c)) report.failure_codes.push_back(c);
  };

  if (seq.extrusion_count() == 0) flag(FailureCode::NoExtrusionToken);

  for (const auto& step : seq.steps) {
    for (const auto& loop : step.loops) {
      bool malformed = false;
      bool has_circle = false;
      for (const auto& prim : loop.primitives) {
        const auto t = classify_primitive(prim);
        if (!t) {
          malformed = true;
        } else if (*t == PrimitiveType::Circle) {
          has_circle = true;
        }
      }
      if (malformed) flag(FailureCode::MalformedPrimitive);
      if (loop.primitives.size() == 1) {
        const auto t = classify_primitive(loop.primitives.front());
        if (t && *t == PrimitiveType::Line) {
          flag(FailureCode::SingleLineLoop);
          continue;  // a single line is reported as such, not as an open loop
        }
      }
      if (has_circle && loop.primitives.size() > 1) {
        // a circle chained with other primitives is a malformed configuration
        flag(FailureCode::MalformedPrimitive);
      }
      if (!malformed && !loop_is_closed(loop)) flag(FailureCode::OpenLoop);
    }
    if (step.extrusion) {
      const auto& e = *step.extrusion;
      const bool zero_extent = quantize(e.distances[0], seq.quantization) == 0 &&
                               quantize(e.distances[1], seq.quantization) == 0;
      // an extrusion without any sketch loop sweeps an empty region
      if (zero_extent || step.loops.empty()) flag(FailureCode::ZeroVolume);
    }
  }

  if (token_count(seq) > kLMax) flag(FailureCode::TokenOverflow);

  report.valid = report.failure_codes.empty();
  return report;
}

// Separate continuous/quantized views of the same sequence. Quantizing snaps
// every continuous scalar to the bin grid; sentinels map to the sentinel
// class and back.
inline CadSequence quantize_sequence(const CadSequence& seq) {
  CadSequence out = seq;
  const auto& spec = seq.quantization;
  auto snap2 = [&spec](Vec2 v) { return Vec2{snap_to_grid(v.x, spec), snap_to_grid(v.y, spec)}; };
  for (auto& step : out.steps) {
    for (auto& loop : step.loops) {
      for (auto& prim : loop.primitives) {
        prim.start = snap2(prim.start);
        prim.mid = snap2(prim.mid);
        prim.end = snap2(prim.end);
      }
    }
    if (step.extrusion) {
      auto& e = *step.extrusion;
      for (auto& v : e.orientation) v = snap_to_grid(v, spec);
      for (auto& v : e.origin) v = snap_to_grid(v, spec);
      e.scale = snap_to_grid(e.scale, spec);
      for (auto& v : e.distances) v = snap_to_grid(v, spec);
    }
  }
  return out;
}

// Quantized class indices for a loop in the fixed np_max x 6 slot layout;
// unused slots are all-sentinel.
inline std::vector<std::array<int, 6>> loop_slot_classes(const Loop& loop,
                                                         const QuantizationSpec& spec,
                                                         int np_max = kNpMax) {
  std::vector<std::array<int, 6>> slots(static_cast<std::size_t>(np_max));
  for (int s = 0; s < np_max; ++s) {
    if (s < static_cast<int>(loop.primitives.size())) {
      const auto f = loop.primitives[static_cast<std::size_t>(s)].flat();
      for (int c = 0; c < 6; ++c)
        slots[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] =
            quantize_coord(f[static_cast<std::size_t>(c)], spec);
    } else {
      slots[static_cast<std::size_t>(s)].fill(spec.sentinel_index());
    }
  }
  return slots;
}

}  // namespace transcad
