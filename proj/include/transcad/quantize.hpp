#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace transcad {

// Continuous parameters live in [0, 1] and snap to 8-bit bins. One extra
// class index (== bins) is reserved for the dummy/pad sentinel, exploiting
// the closed index range [0, bins].
struct QuantizationSpec {
  int bins = 256;

  int sentinel_index() const { return bins; }
  int num_classes() const { return bins + 1; }

  bool operator==(const QuantizationSpec&) const = default;
};

// Continuous-space marker for a sentinel coordinate (line midpoints, pad
// slots). Any value < -0.5 is treated as sentinel on read.
constexpr double kSentinelCoord = -1.0;

inline bool is_sentinel(double x) { return x < -0.5; }

// clamp(round(x * (bins-1)), 0, bins-1), round half away from zero
inline int quantize(double x, const QuantizationSpec& spec = {}) {
  if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite input");
  const double clamped = std::clamp(x, 0.0, 1.0);
  const double scaled = std::round(clamped * static_cast<double>(spec.bins - 1));
  return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(spec.bins - 1)));
}

inline double dequantize(int index, const QuantizationSpec& spec = {}) {
  if (index == spec.sentinel_index()) return kSentinelCoord;
  if (index < 0 || index > spec.bins)
    throw std::out_of_range("dequantize: index out of range");
  return static_cast<double>(index) / static_cast<double>(spec.bins - 1);
}

// Sentinel-aware variants used for the 6-coordinate primitive layout.
inline int quantize_coord(double x, const QuantizationSpec& spec = {}) {
  return is_sentinel(x) ? spec.sentinel_index() : quantize(x, spec);
}

inline double snap_to_grid(double x, const QuantizationSpec& spec = {}) {
  return is_sentinel(x) ? kSentinelCoord : dequantize(quantize(x, spec), spec);
}

}  // namespace transcad
