// Noisy sphere, mls field, momentum vs classical ascent.

#include <cstdio>

#include <ascent/ascent.hpp>

using namespace ascent;

int main() {
  const TriMesh mesh = shapes::by_name("sphere");
  const PointCloud clean = shapes::sample_surface(mesh, 10000, 1);
  const PointCloud noisy = add_noise(clean, {NoiseKind::gaussian, 0.02, 7});

  // Anchors, their planes and the ensemble neighbourhoods come from the noisy
  // cloud once; only the query positions move during ascent.
  const MlsField field = build_mls_field(noisy, build_knn_graph(noisy, 64));
  const NeighborGraph graph = build_knn_graph(noisy, 4);
  const SurfaceLocator surface(mesh);

  std::printf("%-22s %10s %10s\n", "", "CD x1e4", "P2M x1e4");
  std::printf("%-22s %10.4f %10.4f\n", "noisy", chamfer_distance(noisy, clean) * kDisplayScale,
              point_to_mesh(noisy, surface) * kDisplayScale);

  AscentConfig cfg;  // T = 15, alpha = 0.9, beta = 0.2, gamma = 0.95
  const auto momentum = denoise(noisy, field, graph, cfg);
  std::printf("%-22s %10.4f %10.4f\n", "momentum T=15", chamfer_distance(momentum.cloud, clean) * kDisplayScale,
              point_to_mesh(momentum.cloud, surface) * kDisplayScale);

  for (std::size_t steps : {15u, 30u}) {
    cfg.steps = steps;
    const auto classical = classical_denoise(noisy, field, graph, cfg);
    std::printf("classical T=%-10zu %10.4f %10.4f\n", steps,
                chamfer_distance(classical.cloud, clean) * kDisplayScale,
                point_to_mesh(classical.cloud, surface) * kDisplayScale);
  }
}
