#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "transcad/vec3.hpp"

namespace transcad {

// Static 3D k-d tree for exact nearest-neighbor queries. Build once, query
// from any number of threads.
class KdTree {
 public:
  struct Hit {
    int index = -1;
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  explicit KdTree(std::span<const Vec3> pts) : pts_(pts.begin(), pts.end()) {
    if (pts_.empty()) return;
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(pts_.size());
    root_ = build(0, static_cast<int>(pts_.size()));
  }

  std::size_t size() const { return pts_.size(); }

  Hit nearest(const Vec3& q) const {
    Hit best;
    if (root_ >= 0) search(root_, q, best);
    return best;
  }

  // k nearest, sorted by (distance, index); ties break deterministically.
  std::vector<Hit> knn(const Vec3& q, int k) const {
    std::vector<Hit> heap;  // max-heap on (dist_sq, index)
    if (root_ >= 0) search_knn(root_, q, k, heap);
    std::sort(heap.begin(), heap.end(), [](const Hit& a, const Hit& b) {
      return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.index < b.index;
    });
    return heap;
  }

 private:
  struct Node {
    Vec3 point;
    int index = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  static bool hit_less(const Hit& a, const Hit& b) {
    return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq : a.index < b.index;
  }

  int build(int lo, int hi) {
    if (lo >= hi) return -1;
    // split along the widest axis of this subset
    Vec3 mn = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(lo)])];
    Vec3 mx = mn;
    for (int i = lo; i < hi; ++i) {
      const Vec3& p = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
      mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
      mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
    }
    const Vec3 span = mx - mn;
    int axis = 0;
    if (span.y > span[axis]) axis = 1;
    if (span.z > span[axis]) axis = 2;

    const int mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [this, axis](int a, int b) {
                       const double va = pts_[static_cast<std::size_t>(a)][axis];
                       const double vb = pts_[static_cast<std::size_t>(b)][axis];
                       return va != vb ? va < vb : a < b;
                     });
    const int idx = order_[static_cast<std::size_t>(mid)];
    Node node;
    node.point = pts_[static_cast<std::size_t>(idx)];
    node.index = idx;
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(lo, mid);
    const int right = build(mid + 1, hi);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void search(int ni, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(ni)];
    const double d = distance_sq(q, node.point);
    if (d < best.dist_sq || (d == best.dist_sq && node.index < best.index)) {
      best = {node.index, d};
    }
    const double delta = q[node.axis] - node.point[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (near >= 0) search(near, q, best);
    if (far >= 0 && delta * delta <= best.dist_sq) search(far, q, best);
  }

  void search_knn(int ni, const Vec3& q, int k, std::vector<Hit>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(ni)];
    const Hit h{node.index, distance_sq(q, node.point)};
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(h);
      std::push_heap(heap.begin(), heap.end(), hit_less);
    } else if (hit_less(h, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), hit_less);
      heap.back() = h;
      std::push_heap(heap.begin(), heap.end(), hit_less);
    }
    const double delta = q[node.axis] - node.point[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (near >= 0) search_knn(near, q, k, heap);
    const bool full = static_cast<int>(heap.size()) >= k;
    if (far >= 0 && (!full || delta * delta <= heap.front().dist_sq)) search_knn(far, q, k, heap);
  }

  std::vector<Vec3> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace transcad
