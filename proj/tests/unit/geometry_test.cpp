#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "oracles.hpp"

using namespace ascent;

namespace {

PointCloud cloud_of(std::vector<Vec3> pts) { return PointCloud(std::move(pts)); }

std::vector<std::size_t> as_vector(std::span<const std::size_t> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Normalize, TwoPointsAreSymmetric) {
  const auto [out, t] = normalize(cloud_of({{0, 0, 0}, {2, 0, 0}}));
  EXPECT_EQ(t.center, Vec3(1, 0, 0));
  EXPECT_EQ(t.scale, 1.0);
  EXPECT_EQ(out[0], Vec3(-1, 0, 0));
  EXPECT_EQ(out[1], Vec3(1, 0, 0));
  ASSERT_TRUE(out.transform.has_value());
}

TEST(Normalize, SinglePointGetsUnitScale) {
  const auto [out, t] = normalize(cloud_of({{5, 5, 5}}));
  EXPECT_EQ(t.center, Vec3(5, 5, 5));
  EXPECT_EQ(t.scale, 1.0);
  EXPECT_EQ(out[0], Vec3::Zero());
}

TEST(Normalize, FarthestPointHasUnitNorm) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = oracle::random_points(rng, 100, -40.0, 25.0);
    const auto [out, t] = normalize(cloud_of(pts));
    double maxn = 0;
    for (const auto& p : out.points) maxn = std::max(maxn, p.norm());
    EXPECT_NEAR(maxn, 1.0, 1e-12);
    EXPECT_GT(t.scale, 0.0);
  }
}

TEST(Normalize, RoundTripIsIdentity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = oracle::random_points(rng, 200, -1e3, 1e3);
    const auto back = denormalize(normalize(cloud_of(pts)).first);
    ASSERT_EQ(back.size(), pts.size());
    EXPECT_FALSE(back.transform.has_value());
    for (std::size_t i = 0; i < pts.size(); ++i)
      EXPECT_LE((back[i] - pts[i]).norm(), 1e-12 * std::max(1.0, pts[i].norm()));
  }
}

TEST(Normalize, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(normalize(PointCloud{}), InvalidInput);
  EXPECT_THROW(normalize(cloud_of({{0, std::nan(""), 0}})), InvalidInput);
  EXPECT_THROW(normalize(cloud_of({{0, 0, INFINITY}})), InvalidInput);
}

TEST(KnnGraph, CollinearPoints) {
  const auto g = build_knn_graph(cloud_of({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}), 1);
  EXPECT_EQ(as_vector(g.neighbors(0)), std::vector<std::size_t>{1});
  EXPECT_EQ(as_vector(g.neighbors(1)), std::vector<std::size_t>{0});
  EXPECT_EQ(as_vector(g.neighbors(2)), std::vector<std::size_t>{1});
  EXPECT_FALSE(g.truncated);
}

TEST(KnnGraph, SquareCornersPickEdgeNeighbours) {
  const auto g = build_knn_graph(cloud_of({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}), 2);
  EXPECT_EQ(as_vector(g.neighbors(0)), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(as_vector(g.neighbors(1)), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(as_vector(g.neighbors(2)), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(as_vector(g.neighbors(3)), (std::vector<std::size_t>{0, 2}));
}

TEST(KnnGraph, TruncatesWhenKTooLarge) {
  const auto g = build_knn_graph(cloud_of({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}), 5);
  EXPECT_TRUE(g.truncated);
  EXPECT_EQ(g.k, 2u);
  EXPECT_EQ(g.requested_k, 5u);
  EXPECT_EQ(as_vector(g.neighbors(2)), (std::vector<std::size_t>{1, 0}));
}

TEST(KnnGraph, RejectsBadArguments) {
  EXPECT_THROW(build_knn_graph(cloud_of({{0, 0, 0}, {1, 0, 0}}), 0), InvalidInput);
  EXPECT_THROW(build_knn_graph(cloud_of({{0, 0, 0}}), 1), InvalidInput);
}

TEST(KnnGraph, MatchesBruteForceOnRandomClouds) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(2, 500), kpick(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = oracle::random_points(rng, size(rng));
    if (trial % 4 == 0) {
      // Integer lattice coordinates produce many exact distance ties.
      std::uniform_int_distribution<int> lat(-3, 3);
      for (auto& p : pts) p = Vec3(lat(rng), lat(rng), lat(rng));
    }
    const std::size_t k = kpick(rng);
    const auto g = build_knn_graph(cloud_of(pts), k);
    ASSERT_EQ(g.k, std::min(k, pts.size() - 1));
    for (std::size_t i = 0; i < pts.size(); ++i)
      ASSERT_EQ(as_vector(g.neighbors(i)), oracle::knn(pts, i, k)) << "trial " << trial << " point " << i;
  }
}

TEST(KnnGraph, DistancesNonDecreasingAndSelfFree) {
  std::mt19937_64 rng(5);
  const auto pts = oracle::random_points(rng, 300);
  const auto g = build_knn_graph(cloud_of(pts), 8);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double prev = 0;
    for (auto j : g.neighbors(i)) {
      EXPECT_NE(j, i);
      const double d = oracle::dist2(pts[i], pts[j]);
      EXPECT_GE(d, prev);
      prev = d;
    }
  }
}

TEST(KdTree, ConcurrentReadersAgree) {
  std::mt19937_64 rng(9);
  const auto pts = oracle::random_points(rng, 2000);
  const auto queries = oracle::random_points(rng, 500);
  const KdTree tree(pts);
  std::vector<std::size_t> serial(queries.size()), threaded(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) serial[q] = tree.nearest(queries[q]).index;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < 4; ++w)
    workers.emplace_back([&, w] {
      for (std::size_t q = w; q < queries.size(); q += 4) threaded[q] = tree.nearest(queries[q]).index;
    });
  workers.clear();
  EXPECT_EQ(serial, threaded);
}

TEST(NearestSurface, PointOnFaceIsItself) {
  TriMesh m{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};
  const auto s = nearest_surface_point(m, {0.2, 0.3, 0});
  EXPECT_LE(s.distance, 1e-15);
  EXPECT_LE((s.point - Vec3(0.2, 0.3, 0)).norm(), 1e-15);
}

TEST(NearestSurface, RightTriangleInteriorProjection) {
  TriMesh m{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};
  const auto s = nearest_surface_point(m, {0.25, 0.25, 1});
  EXPECT_EQ(s.point, Vec3(0.25, 0.25, 0));
  EXPECT_EQ(s.distance, 1.0);
}

TEST(NearestSurface, EdgeAndVertexRegions) {
  TriMesh m{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};
  EXPECT_TRUE(nearest_surface_point(m, {-1, -1, 0}).point.isApprox(Vec3(0, 0, 0)));
  EXPECT_TRUE(nearest_surface_point(m, {0.5, -2, 0}).point.isApprox(Vec3(0.5, 0, 0)));
  EXPECT_TRUE(nearest_surface_point(m, {1, 1, 0}).point.isApprox(Vec3(0.5, 0.5, 0)));
  EXPECT_TRUE(nearest_surface_point(m, {3, -1, 2}).point.isApprox(Vec3(1, 0, 0)));
}

TEST(NearestSurface, EmptyMeshRejected) {
  EXPECT_THROW(nearest_surface_point(TriMesh{}, Vec3::Zero()), InvalidInput);
  EXPECT_THROW(SurfaceLocator(TriMesh{}), InvalidInput);
}

TEST(NearestSurface, MatchesBruteForceOverTriangles) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mesh = oracle::random_mesh(rng, 20);
    const SurfaceLocator bvh(mesh);
    for (const auto& q : oracle::random_points(rng, 40, -2.0, 2.0)) {
      const auto want = oracle::nearest_on_mesh(mesh, q);
      const auto lin = nearest_surface_point(mesh, q);
      const auto fast = bvh.nearest(q);
      EXPECT_NEAR(lin.distance * lin.distance, want.d2, 1e-12 * std::max(1.0, want.d2));
      EXPECT_LE((lin.point - want.point).norm(), 1e-9);
      EXPECT_EQ(fast.point, lin.point);
      EXPECT_EQ(fast.distance, lin.distance);
      EXPECT_EQ(fast.face, lin.face);
    }
  }
}

TEST(NearestSurface, NeverFartherThanAnyVertex) {
  std::mt19937_64 rng(4);
  const auto mesh = shapes::torus(0.7, 0.3, 24, 12);
  const SurfaceLocator bvh(mesh);
  for (const auto& q : oracle::random_points(rng, 500, -1.5, 1.5)) {
    const double d = bvh.nearest(q).distance;
    for (const auto& v : mesh.vertices) ASSERT_LE(d, (q - v).norm() + 1e-15);
  }
}

TEST(Mesh, SanitizeDropsDegenerateFaces) {
  TriMesh m{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}}, {{0, 1, 2}, {0, 1, 3}, {1, 1, 2}}};
  EXPECT_EQ(sanitize(m), 2u);
  ASSERT_EQ(m.face_count(), 1u);
  EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
}

TEST(Mesh, SanitizeRejectsBadIndices) {
  TriMesh m{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 7}}};
  EXPECT_THROW(sanitize(m), InvalidInput);
}
