#include <catch2/catch_amalgamated.hpp>

#include "transcad/normals.hpp"
#include "transcad/rng.hpp"

using namespace transcad;

TEST_CASE("planar clouds estimate the plane normal") {
  Rng rng(2);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(), rng.uniform(), 0.0});
  const auto est = estimate_normals(pts, 12);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK_FALSE(est.degenerate[i]);
    CHECK(std::abs(est.normals[i].z) == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("sphere normals align with the radial direction") {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 800; ++i) {
    // uniform direction via normalized gaussian triple
    const Vec3 d = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
    pts.push_back(d * 0.8);
  }
  const auto est = estimate_normals(pts, 30);
  double agreement = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    agreement += std::abs(dot(est.normals[i], normalized(pts[i])));
  agreement /= static_cast<double>(pts.size());
  CHECK(agreement >= 0.99);
  // flipped away from the centroid (origin): outward
  int outward = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (dot(est.normals[i], pts[i]) > 0) ++outward;
  CHECK(outward == static_cast<int>(pts.size()));
}

TEST_CASE("collinear neighborhoods are flagged degenerate") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 16; ++i) pts.push_back({static_cast<double>(i), 0.0, 0.0});
  const auto est = estimate_normals(pts, 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(est.degenerate[i]);
    CHECK(norm(est.normals[i]) == Catch::Approx(1.0));
  }
}

TEST_CASE("symmetric eigensolver recovers known spectra") {
  Mat3 m;
  m(0, 0) = 4.0; m(1, 1) = 2.0; m(2, 2) = 1.0;
  m(0, 1) = m(1, 0) = 1.0;
  std::array<double, 3> vals{};
  Mat3 vecs;
  symmetric_eigen3(m, vals, vecs);
  CHECK(vals[0] >= vals[1]);
  CHECK(vals[1] >= vals[2]);
  // eigen residual ||M v - lambda v||
  for (int k = 0; k < 3; ++k) {
    const Vec3 v{vecs(0, k), vecs(1, k), vecs(2, k)};
    const Vec3 mv = m * v;
    const Vec3 lv = v * vals[static_cast<std::size_t>(k)];
    CHECK(distance(mv, lv) < 1e-10);
  }
}
