#pragma once

#include <span>
#include <vector>

#include "transcad/errors.hpp"
#include "transcad/kdtree.hpp"
#include "transcad/point_cloud.hpp"

namespace transcad {

// Reported chamfer values are the raw values multiplied by 10^3.
constexpr double kCdReportScale = 1e3;

// Measurement uncertainty of the chamfer distance at 4096 samples; pairs
// closer than this are geometrical duplicates.
constexpr double kDuplicateThresholdRaw = 3e-4;

// CD(A,B) = mean_a min_b ||a-b||^2 + mean_b min_a ||a-b||^2 (squared
// nearest-neighbor distances, symmetric sum). The tree overload lets callers
// reuse prebuilt k-d trees across many pairings.
inline double chamfer_distance(const PointCloud& a, const KdTree& tree_a, const PointCloud& b,
                               const KdTree& tree_b) {
  if (a.empty() || b.empty()) throw Error("chamfer_distance: empty cloud");
  double sum_ab = 0.0;
  for (const auto& p : a.points) sum_ab += tree_b.nearest(p).dist_sq;
  double sum_ba = 0.0;
  for (const auto& p : b.points) sum_ba += tree_a.nearest(p).dist_sq;
  return sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size());
}

inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error("chamfer_distance: empty cloud");
  return chamfer_distance(a, KdTree(a.points), b, KdTree(b.points));
}

// Exact predicate CD(A,B) >= threshold with early exit: any partial
// one-sided sum divided by the cloud size is already a lower bound on the
// full CD.
inline bool chamfer_exceeds(const PointCloud& a, const KdTree& tree_a, const PointCloud& b,
                            const KdTree& tree_b, double threshold) {
  const double bound_ab = threshold * static_cast<double>(a.size());
  double sum_ab = 0.0;
  for (const auto& p : a.points) {
    sum_ab += tree_b.nearest(p).dist_sq;
    if (sum_ab >= bound_ab) return true;
  }
  double cd = sum_ab / static_cast<double>(a.size());
  for (const auto& p : b.points) {
    cd += tree_a.nearest(p).dist_sq / static_cast<double>(b.size());
    if (cd >= threshold) return true;
  }
  return cd >= threshold;
}

inline double chamfer_distance_reported(const PointCloud& a, const PointCloud& b) {
  return chamfer_distance(a, b) * kCdReportScale;
}

// O(n^2) reference used as the oracle for the k-d tree path.
inline double chamfer_distance_brute(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error("chamfer_distance: empty cloud");
  auto one_side = [](const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const auto& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to.points) best = std::min(best, distance_sq(p, q));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return one_side(a, b) + one_side(b, a);
}

// Lowest raw CD from a test cloud to any train cloud; proxy for how far the
// test sample is out of distribution.
inline double model_complexity(const PointCloud& test, std::span<const PointCloud> train) {
  if (train.empty()) throw Error("model_complexity: empty train set");
  const KdTree test_tree(test.points);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : train)
    best = std::min(best, chamfer_distance(test, test_tree, t, KdTree(t.points)));
  return best;
}

// duplicate <=> min train CD < threshold; the scan short-circuits on the
// first train cloud under the threshold.
inline std::vector<bool> find_duplicates(std::span<const PointCloud> test,
                                         std::span<const PointCloud> train,
                                         double threshold_raw = kDuplicateThresholdRaw) {
  std::vector<KdTree> train_trees;
  train_trees.reserve(train.size());
  for (const auto& t : train) train_trees.emplace_back(t.points);
  std::vector<bool> out;
  out.reserve(test.size());
  for (const auto& t : test) {
    const KdTree test_tree(t.points);
    bool duplicate = false;
    for (std::size_t i = 0; i < train.size() && !duplicate; ++i) {
      duplicate = !chamfer_exceeds(t, test_tree, train[i], train_trees[i], threshold_raw);
    }
    out.push_back(duplicate);
  }
  return out;
}

// Chamfer-space retrieval baseline: index of the candidate cloud closest to
// the query; ties break toward the lowest index.
inline std::size_t retrieve_nearest_index(const PointCloud& query,
                                          std::span<const PointCloud> candidates) {
  if (candidates.empty()) throw Error("retrieve_nearest: no candidates");
  const KdTree query_tree(query.points);
  std::size_t best_idx = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double cd = chamfer_distance(query, query_tree, candidates[i], KdTree(candidates[i].points));
    if (cd < best) {
      best = cd;
      best_idx = i;
    }
  }
  return best_idx;
}

}  // namespace transcad
