#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace ascent;

namespace {

AscentConfig config(std::size_t steps, double alpha, double beta = 0.2, double gamma = 0.95) {
  AscentConfig c;
  c.steps = steps;
  c.alpha = alpha;
  c.beta = beta;
  c.gamma = gamma;
  return c;
}

struct Noisy {
  PointCloud cloud;
  NeighborGraph graph;
  MlsField field;
};

Noisy noisy_sphere(std::size_t n, std::uint64_t seed) {
  auto cloud = add_noise(shapes::sample_shape("sphere", n, seed), {NoiseKind::gaussian, 0.02, seed + 1});
  auto graph = build_knn_graph(cloud, 4);
  auto field = build_mls_field(cloud, build_knn_graph(cloud, 32));
  return {std::move(cloud), std::move(graph), std::move(field)};
}

}  // namespace

TEST(MomentumStep, FirstVelocity) {
  const auto s = momentum_step(AscentState::start(std::vector<Vec3>{Vec3::Zero()}),
                               std::vector<Vec3>{{1, 0, 0}}, config(15, 0.9));
  EXPECT_EQ(s.velocities[0], Vec3(0.9, 0, 0));
  EXPECT_EQ(s.t, 1u);
}

TEST(MomentumStep, FirstIncrementUsesGammaToTheOne) {
  const auto s = momentum_step(AscentState::start(std::vector<Vec3>{Vec3::Zero()}),
                               std::vector<Vec3>{{1, 0, 0}}, config(15, 0.9));
  EXPECT_NEAR(s.positions[0].x(), 0.171, 1e-15);
  EXPECT_EQ(s.positions[0].y(), 0.0);
}

TEST(MomentumStep, ZeroFieldNeverMoves) {
  auto s = AscentState::start(std::vector<Vec3>{{1, 2, 3}, {-1, 0, 4}});
  const std::vector<Vec3> zero(2, Vec3::Zero());
  for (int t = 0; t < 15; ++t) s = momentum_step(s, zero, config(15, 0.9));
  EXPECT_EQ(s.positions[0], Vec3(1, 2, 3));
  EXPECT_EQ(s.positions[1], Vec3(-1, 0, 4));
  EXPECT_EQ(s.velocities[0], Vec3::Zero());
}

TEST(MomentumStep, AlphaOneVelocityIsGradient) {
  std::mt19937_64 rng(1);
  auto s = AscentState::start(oracle::random_points(rng, 5));
  auto x = s.positions;
  for (int t = 1; t <= 10; ++t) {
    const auto z = oracle::random_points(rng, 5);
    s = momentum_step(s, z, config(10, 1.0));
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(s.velocities[i], z[i]);
      x[i] += 0.2 * std::pow(0.95, t) * z[i];
      EXPECT_EQ(s.positions[i], x[i]);
    }
  }
}

TEST(MomentumStep, NanGradientNamesThePoint) {
  auto s = AscentState::start(std::vector<Vec3>(4, Vec3::Zero()));
  std::vector<Vec3> z(4, Vec3::Zero());
  z[2].y() = std::nan("");
  try {
    advance(s, z, config(15, 0.9));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("point 2"), std::string::npos);
  }
}

TEST(MomentumStep, RejectsInvalidConfigAndOverrun) {
  auto s = AscentState::start(std::vector<Vec3>{Vec3::Zero()});
  const std::vector<Vec3> z{Vec3::Zero()};
  EXPECT_THROW(advance(s, z, config(15, 0.0)), InvalidInput);
  EXPECT_THROW(advance(s, z, config(15, 1.5)), InvalidInput);
  EXPECT_THROW(advance(s, z, config(15, 0.9, -0.1)), InvalidInput);
  EXPECT_THROW(advance(s, z, config(15, 0.9, 0.2, 1.2)), InvalidInput);
  advance(s, z, config(1, 0.9));
  EXPECT_THROW(advance(s, z, config(1, 0.9)), InvalidInput);
}

TEST(Denoise, OnSurfacePointsAreFixed) {
  const auto mesh = shapes::by_name("cube");
  const auto cloud = shapes::sample_surface(mesh, 500, 2);
  const OracleField field(mesh, cloud.size());
  const auto out = denoise(cloud, field, build_knn_graph(cloud, 4), AscentConfig{});
  for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_LE((out.cloud[i] - cloud[i]).norm(), 1e-9);
}

TEST(Denoise, SinglePointApproachesUnitSphere) {
  // Hand-rolled recurrence against the oracle, then the library on a
  // two-point cloud whose second point sits far away on the other side.
  const auto sphere = shapes::icosphere(shapes::kSphereSubdivisions);
  const PointCloud cloud({{1.5, 0, 0}, {0, 0, -1.5}});
  const OracleField field(sphere, 2);
  const auto out = denoise(cloud, field, build_knn_graph(cloud, 1), AscentConfig{}, true);

  Vec3 x(1.5, 0, 0), v = Vec3::Zero();
  std::vector<double> gap{0.5};
  for (int t = 1; t <= 15; ++t) {
    v = 0.9 * oracle_query(sphere, x) + 0.1 * v;
    x += 0.2 * std::pow(0.95, t) * v;
    gap.push_back(std::abs(x.norm() - 1.0));
  }
  EXPECT_LE((out.cloud[0] - x).norm(), 1e-12);
  EXPECT_LT(gap.back(), 0.5);
  for (std::size_t t = 3; t < gap.size(); ++t) EXPECT_LE(gap[t], gap[t - 1]) << "step " << t;
  const auto& traj = *out.trajectory;
  ASSERT_EQ(traj.positions.size(), 16u);
  EXPECT_EQ(traj.positions.front()[0], Vec3(1.5, 0, 0));
}

TEST(Denoise, AlphaOneMatchesIndependentClassicalLoop) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto s = noisy_sphere(800, seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 0.6), g(0.8, 1.0);
    const auto cfg = config(5 + seed * 3, 1.0, u(rng), g(rng));
    const auto got = denoise(s.cloud, s.field, s.graph, cfg);
    const auto want = oracle::classical_ascent(s.field, s.graph, s.cloud.points, cfg.steps, cfg.beta, cfg.gamma);
    EXPECT_EQ(got.cloud.points, want);
    EXPECT_EQ(classical_denoise(s.cloud, s.field, s.graph, config(cfg.steps, 0.4, cfg.beta, cfg.gamma)).cloud.points,
              want);
  }
}

TEST(Denoise, DisplacementIsDampedByDecay) {
  const auto s = noisy_sphere(2000, 9);
  for (double alpha : {0.5, 0.9, 1.0}) {
    const auto cfg = config(30, alpha, 0.3, 0.9);
    const auto traj = *denoise(s.cloud, s.field, s.graph, cfg, true).trajectory;
    double gmax = 0;
    for (std::size_t t = 1; t < traj.stats.size(); ++t) {
      gmax = std::max(gmax, traj.stats[t].max_gradient_norm);
      const double bound = cfg.beta * std::pow(cfg.gamma, static_cast<double>(t)) * gmax / alpha;
      EXPECT_LE(traj.stats[t].max_displacement, bound * (1 + 1e-12)) << "alpha " << alpha << " step " << t;
    }
  }
}

TEST(Denoise, ThreadCountDoesNotChangeResult) {
  const auto s = noisy_sphere(3000, 3);
  auto cfg = AscentConfig{};
  const auto one = denoise(s.cloud, s.field, s.graph, cfg).cloud.points;
  for (std::size_t threads : {2u, 3u, 8u}) {
    cfg.threads = threads;
    EXPECT_EQ(denoise(s.cloud, s.field, s.graph, cfg).cloud.points, one);
  }
}

TEST(Denoise, MapsBackToModelUnits) {
  auto cloud = shapes::sample_shape("sphere", 1000, 4);
  for (auto& p : cloud.points) p = 5.0 * p + Vec3(10, -3, 2);
  const auto [norm, t] = normalize(cloud);
  const OracleField field(shapes::by_name("sphere"), norm.size());
  const auto graph = build_knn_graph(norm, 4);
  const auto out = denoise(norm, field, graph, AscentConfig{});
  const auto raw = denoise(PointCloud(norm.points), field, graph, AscentConfig{});
  EXPECT_FALSE(out.cloud.transform.has_value());
  for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_EQ(out.cloud[i], t.invert(raw.cloud[i]));
}

TEST(Denoise, MismatchedFieldRejected) {
  const auto s = noisy_sphere(300, 1);
  const auto other = noisy_sphere(200, 2);
  EXPECT_THROW(denoise(s.cloud, other.field, s.graph, AscentConfig{}), InvalidInput);
}

TEST(Trace, OneJsonObjectPerRecordedStep) {
  const auto s = noisy_sphere(300, 1);
  const auto out = denoise(s.cloud, s.field, s.graph, config(4, 0.9), true);
  std::ostringstream os;
  write_trace(os, *out.trajectory);
  std::istringstream is(os.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("step").get<std::size_t>(), n);
    EXPECT_TRUE(j.contains("mean_gradient_norm"));
    EXPECT_TRUE(j.contains("mean_displacement"));
    ++n;
  }
  EXPECT_EQ(n, 5u);
}
