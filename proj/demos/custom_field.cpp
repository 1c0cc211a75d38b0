// Plugging an analytic field into the solver and reading the trajectory.

#include <cstdio>

#include <ascent/ascent.hpp>

using namespace ascent;

// Exact field of a sphere of given radius: the same for every anchor.
class SphereField final : public GradientField {
 public:
  SphereField(double radius, std::size_t anchors) : radius_(radius), anchors_(anchors) {}

  std::string_view provider() const override { return "sphere"; }
  std::size_t anchor_count() const override { return anchors_; }
  bool anchor_independent() const override { return true; }

  Vec3 query(std::size_t anchor, const Vec3& x) const override {
    check_anchor(anchor);
    const double r = x.norm();
    return r > 0 ? Vec3((radius_ / r - 1.0) * x) : Vec3::Zero();
  }

 private:
  double radius_;
  std::size_t anchors_;
};

int main() {
  auto cloud = shapes::sample_shape("sphere", 2000, 3);
  for (auto& p : cloud.points) p *= 2.0;
  const PointCloud noisy = add_noise(cloud, {NoiseKind::laplace, 0.02, 11});

  const SphereField field(2.0, noisy.size());
  const auto graph = build_knn_graph(noisy, 4);
  const auto result = denoise(noisy, field, graph, AscentConfig{}, /*record=*/true);

  std::printf("step  mean|z|     mean step\n");
  for (const auto& s : result.trajectory->stats)
    if (s.step > 0) std::printf("%4zu  %.6f  %.6f\n", s.step, s.mean_gradient_norm, s.mean_displacement);
}
