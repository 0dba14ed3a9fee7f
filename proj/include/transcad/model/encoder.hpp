#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "transcad/model/config.hpp"
#include "transcad/nn/layers.hpp"
#include "transcad/point_cloud.hpp"

namespace transcad {

// Lexicographic (x, y, z) ordering; the canonical order makes farthest-point
// sampling and grouping permutation-invariant.
inline std::vector<std::size_t> canonical_order(std::span<const Vec3> points) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&points](std::size_t a, std::size_t b) {
    const Vec3& pa = points[a];
    const Vec3& pb = points[b];
    if (pa.x != pb.x) return pa.x < pb.x;
    if (pa.y != pb.y) return pa.y < pb.y;
    return pa.z < pb.z;
  });
  return idx;
}

// Deterministic farthest-point sampling seeded from point 0 of the given
// order; distance ties break toward the lower index.
inline std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points,
                                                      std::size_t count) {
  const std::size_t n = points.size();
  count = std::min(count, n);
  std::vector<std::size_t> selected;
  selected.reserve(count);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::size_t current = 0;
  for (std::size_t k = 0; k < count; ++k) {
    selected.push_back(current);
    std::size_t next = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], distance_sq(points[i], points[current]));
      if (dist[i] > best) {
        best = dist[i];
        next = i;
      }
    }
    current = next;
  }
  return selected;
}

// One set-abstraction level: group each centroid's radius neighborhood
// (capped at `samples`, nearest first), run the shared MLP on
// [relative position, neighbor feature] rows and max-pool per centroid.
struct SetAbstractionLevel {
  nn::Mlp mlp;
  int points = 0;
  double radius = 0.0;
  int samples = 0;

  static SetAbstractionLevel create(nn::ParamStore& store, const std::string& name,
                                    const EncoderLevel& spec, int in_channels, Rng& rng) {
    SetAbstractionLevel level;
    level.points = spec.points;
    level.radius = spec.radius;
    level.samples = spec.samples;
    level.mlp = nn::Mlp::create(
        store, name,
        {static_cast<std::size_t>(3 + in_channels), static_cast<std::size_t>(spec.channels),
         static_cast<std::size_t>(spec.channels)},
        rng);
    return level;
  }

  // positions: current level's points; features: [n x c_in] node
  // returns centroid positions + pooled features node [points x channels]
  nn::NodePtr operator()(nn::ForwardContext& ctx, const std::vector<Vec3>& positions,
                         const nn::NodePtr& features, std::vector<Vec3>& out_positions) const {
    const auto centroid_idx = farthest_point_sample(positions, static_cast<std::size_t>(points));
    out_positions.clear();
    out_positions.reserve(centroid_idx.size());

    std::vector<std::size_t> gather_idx;
    std::vector<std::size_t> offsets{0};
    nn::Tensor rel(0, 0);
    std::vector<double> rel_rows;
    const double r_sq = radius * radius;
    for (const std::size_t ci : centroid_idx) {
      const Vec3 center = positions[ci];
      out_positions.push_back(center);
      // neighbors within radius, nearest first, deterministic tie-break
      std::vector<std::pair<double, std::size_t>> nbrs;
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const double d = distance_sq(positions[i], center);
        if (d <= r_sq) nbrs.push_back({d, i});
      }
      std::sort(nbrs.begin(), nbrs.end());
      if (nbrs.empty()) nbrs.push_back({0.0, ci});  // degenerate: self only
      if (static_cast<int>(nbrs.size()) > samples) nbrs.resize(static_cast<std::size_t>(samples));
      for (const auto& [d, i] : nbrs) {
        gather_idx.push_back(i);
        const Vec3 delta = positions[i] - center;
        rel_rows.push_back(delta.x);
        rel_rows.push_back(delta.y);
        rel_rows.push_back(delta.z);
      }
      offsets.push_back(gather_idx.size());
    }

    nn::Tensor rel_tensor(gather_idx.size(), 3);
    rel_tensor.data = std::move(rel_rows);
    auto neighbor_feats = nn::gather_rows(features, gather_idx);
    auto mlp_in = nn::concat_cols({nn::constant(std::move(rel_tensor)), neighbor_feats});
    auto activated = nn::relu(mlp(ctx, mlp_in));
    return nn::maxpool_groups(activated, offsets);
  }
};

// 4-level hierarchical set-abstraction encoder producing per-point features
// F_p for the final level's points. Input channels are the 3 normals.
struct PointEncoder {
  std::vector<SetAbstractionLevel> levels;

  static PointEncoder create(nn::ParamStore& store, const ModelConfig& cfg, Rng& rng) {
    PointEncoder enc;
    int in_ch = 3;  // normals
    for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
      enc.levels.push_back(SetAbstractionLevel::create(
          store, "encoder.sa" + std::to_string(i), cfg.levels[i], in_ch, rng));
      in_ch = cfg.levels[i].channels;
    }
    return enc;
  }

  // cloud must already be in canonical order
  nn::NodePtr operator()(nn::ForwardContext& ctx, const std::vector<Vec3>& points,
                         const std::vector<Vec3>& normals) const {
    nn::Tensor feat(points.size(), 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
      feat.at(i, 0) = normals[i].x;
      feat.at(i, 1) = normals[i].y;
      feat.at(i, 2) = normals[i].z;
    }
    nn::NodePtr features = nn::constant(std::move(feat));
    std::vector<Vec3> positions = points;
    for (const auto& level : levels) {
      std::vector<Vec3> next_positions;
      features = level(ctx, positions, features, next_positions);
      positions = std::move(next_positions);
    }
    return features;
  }
};

}  // namespace transcad
