#pragma once

#include <algorithm>
#include <queue>
#include <vector>

#include "transcad/errors.hpp"
#include "transcad/kdtree.hpp"
#include "transcad/normals.hpp"
#include "transcad/perlin.hpp"
#include "transcad/point_cloud.hpp"
#include "transcad/rng.hpp"

namespace transcad {

// Displace every point along its normal by amplitude * perlin3(point), then
// re-estimate the normals (k = 30). Displacement magnitude never exceeds the
// amplitude bound.
inline PointCloud apply_noise(const PointCloud& pc, const NoiseSpec& spec) {
  if (pc.empty()) throw Error("apply_noise: empty cloud");
  if (spec.amplitude == 0.0) return pc;
  const Perlin3 gen(spec.seed);
  PointCloud out = pc;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const double d = spec.amplitude * gen.fbm(pc.points[i], spec.octaves, spec.persistence,
                                              spec.lacunarity);
    out.points[i] = pc.points[i] + normalized(pc.normals[i]) * d;
  }
  const auto est = estimate_normals(out.points, 30);
  out.normals = est.normals;
  return out;
}

struct HoleSpec {
  int max_holes = 10;         // hole count ~ U{1..max_holes}
  double ratio_mean = 0.03;   // per-hole removal ratio ~ N(mean, std), clamped
  double ratio_std = 0.015;
  double ratio_clamp = 0.25;
  int min_remaining = 4096;
  int knn = 8;                // k-NN graph degree for the geodesic substitute
  std::uint64_t seed = 0;
};

struct HoleResult {
  PointCloud cloud;
  std::vector<int> removed;  // indices into the input cloud, ascending
};

namespace detail {

// Dijkstra over the k-NN graph; returns (distance, index) pairs in
// non-decreasing order. Graph geodesics stand in for surface geodesics.
inline std::vector<std::pair<double, int>> geodesic_order(
    const std::vector<std::vector<std::pair<int, double>>>& graph, int source) {
  const int n = static_cast<int>(graph.size());
  std::vector<double> dist(static_cast<std::size_t>(n),
                           std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[static_cast<std::size_t>(source)] = 0.0;
  queue.push({0.0, source});
  std::vector<std::pair<double, int>> order;
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    order.push_back({d, u});
    for (const auto& [v, w] : graph[static_cast<std::size_t>(u)]) {
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        queue.push({nd, v});
      }
    }
  }
  return order;
}

}  // namespace detail

// Punches 1..max_holes geodesic balls out of the cloud. Each hole removes
// round(ratio * n) of the seed point's nearest still-present neighbors by
// k-NN-graph shortest-path distance; removal stops once min_remaining points
// are left. Deterministic per seed.
inline HoleResult punch_holes(const PointCloud& pc, const HoleSpec& spec) {
  const int n = static_cast<int>(pc.size());
  if (n < spec.min_remaining)
    throw InsufficientPointsError("punch_holes: cloud smaller than min_remaining");

  const KdTree tree(pc.points);
  std::vector<std::vector<std::pair<int, double>>> graph(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto hits = tree.knn(pc.points[static_cast<std::size_t>(i)], spec.knn + 1);
    for (const auto& h : hits) {
      if (h.index == i) continue;
      const double w = std::sqrt(h.dist_sq);
      graph[static_cast<std::size_t>(i)].push_back({h.index, w});
      graph[static_cast<std::size_t>(h.index)].push_back({i, w});  // undirected
    }
  }

  Rng rng(derive_seed(spec.seed, 0x401e5ULL));
  const int holes = static_cast<int>(rng.uniform_int(1, std::max(1, spec.max_holes)));
  std::vector<bool> present(static_cast<std::size_t>(n), true);
  int remaining = n;

  for (int h = 0; h < holes && remaining > spec.min_remaining; ++h) {
    const double ratio =
        std::clamp(rng.normal(spec.ratio_mean, spec.ratio_std), 0.0, spec.ratio_clamp);
    int quota = static_cast<int>(std::round(ratio * static_cast<double>(n)));
    quota = std::min(quota, remaining - spec.min_remaining);
    // seed point: uniform among present points
    int seed_pt = -1;
    {
      auto k = rng.uniform_int(0, remaining - 1);
      for (int i = 0; i < n; ++i) {
        if (!present[static_cast<std::size_t>(i)]) continue;
        if (k-- == 0) {
          seed_pt = i;
          break;
        }
      }
    }
    if (quota <= 0 || seed_pt < 0) continue;
    const auto order = detail::geodesic_order(graph, seed_pt);
    int taken = 0;
    for (const auto& [d, idx] : order) {
      if (taken >= quota) break;
      if (!present[static_cast<std::size_t>(idx)]) continue;
      present[static_cast<std::size_t>(idx)] = false;
      --remaining;
      ++taken;
    }
  }

  HoleResult result;
  for (int i = 0; i < n; ++i) {
    if (present[static_cast<std::size_t>(i)]) {
      result.cloud.points.push_back(pc.points[static_cast<std::size_t>(i)]);
      result.cloud.normals.push_back(pc.normals[static_cast<std::size_t>(i)]);
    } else {
      result.removed.push_back(i);
    }
  }
  return result;
}

}  // namespace transcad
