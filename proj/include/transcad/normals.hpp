#pragma once

#include <array>
#include <vector>

#include "transcad/errors.hpp"
#include "transcad/kdtree.hpp"
#include "transcad/vec3.hpp"

namespace transcad {

// Jacobi eigensolver for a symmetric 3x3 matrix, eigenvalues descending.
// Deterministic fixed sweep order, converges to machine precision in a few
// sweeps.
inline void symmetric_eigen3(const Mat3& m, std::array<double, 3>& values, Mat3& vectors) {
  Mat3 a = m;
  Mat3 v = Mat3::identity();
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
    if (off < 1e-15) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a(p, q)) < 1e-18) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Mat3 r = Mat3::identity();
        r(p, p) = c;
        r(q, q) = c;
        r(p, q) = s;
        r(q, p) = -s;
        a = r.transposed() * a * r;
        v = v * r;
      }
    }
  }
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&a](int x, int y) { return a(x, x) > a(y, y); });
  Mat3 sorted;
  for (int i = 0; i < 3; ++i) {
    values[static_cast<std::size_t>(i)] = a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
    for (int r = 0; r < 3; ++r) sorted(r, i) = v(r, idx[static_cast<std::size_t>(i)]);
  }
  vectors = sorted;
}

struct NormalEstimate {
  std::vector<Vec3> normals;
  std::vector<bool> degenerate;  // rank < 2 neighborhoods
};

// Per-point PCA over the k nearest neighbors: the normal is the
// least-variance eigenvector, flipped to point away from the cloud centroid.
// Degenerate (collinear) neighborhoods get a fixed unit vector and a flag.
inline NormalEstimate estimate_normals(std::span<const Vec3> points, int k = 30) {
  const int n = static_cast<int>(points.size());
  if (n <= k || k < 3) throw Error("estimate_normals: need n > k >= 3");
  const KdTree tree(points);

  Vec3 centroid{0, 0, 0};
  for (const auto& p : points) centroid += p;
  centroid = centroid * (1.0 / static_cast<double>(n));

  NormalEstimate out;
  out.normals.resize(static_cast<std::size_t>(n));
  out.degenerate.assign(static_cast<std::size_t>(n), false);

  for (int i = 0; i < n; ++i) {
    const auto hits = tree.knn(points[static_cast<std::size_t>(i)], k);
    Vec3 mean{0, 0, 0};
    for (const auto& h : hits) mean += points[static_cast<std::size_t>(h.index)];
    mean = mean * (1.0 / static_cast<double>(hits.size()));
    Mat3 cov;
    cov.m.fill(0.0);
    for (const auto& h : hits) {
      const Vec3 d = points[static_cast<std::size_t>(h.index)] - mean;
      cov(0, 0) += d.x * d.x;
      cov(0, 1) += d.x * d.y;
      cov(0, 2) += d.x * d.z;
      cov(1, 1) += d.y * d.y;
      cov(1, 2) += d.y * d.z;
      cov(2, 2) += d.z * d.z;
    }
    cov(1, 0) = cov(0, 1);
    cov(2, 0) = cov(0, 2);
    cov(2, 1) = cov(1, 2);

    std::array<double, 3> eig{};
    Mat3 vecs;
    symmetric_eigen3(cov, eig, vecs);
    const double rank_tol = std::max(eig[0], 1e-30) * 1e-9;
    if (eig[1] <= rank_tol) {
      out.degenerate[static_cast<std::size_t>(i)] = true;
      out.normals[static_cast<std::size_t>(i)] = {0.0, 0.0, 1.0};
      continue;
    }
    Vec3 normal{vecs(0, 2), vecs(1, 2), vecs(2, 2)};  // least-variance direction
    normal = normalized(normal);
    if (dot(normal, points[static_cast<std::size_t>(i)] - centroid) < 0.0) normal = normal * -1.0;
    out.normals[static_cast<std::size_t>(i)] = normal;
  }
  return out;
}

}  // namespace transcad
