#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/mesh.hpp"
#include "ascent/point_cloud.hpp"
#include "ascent/random.hpp"

namespace ascent::shapes {

/// Subdivided icosahedron with vertices on the unit sphere.
inline TriMesh icosphere(int subdivisions) {
  detail::require(subdivisions >= 0 && subdivisions <= 8, "icosphere: subdivisions in [0, 8]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const auto id = static_cast<std::uint32_t>(m.vertices.size() - 1);
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const auto ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  return m;
}

/// Axis-aligned cube centred at the origin, two triangles per side.
inline TriMesh cube(double half_extent) {
  const double h = half_extent;
  TriMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back((i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h);
  m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
             {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return m;
}

/// Ring torus around the z axis.
inline TriMesh torus(double major, double minor, std::uint32_t segments, std::uint32_t rings) {
  detail::require(major > minor && minor > 0 && segments >= 3 && rings >= 3, "torus: bad parameters");
  TriMesh m;
  for (std::uint32_t i = 0; i < segments; ++i) {
    const double u = 2.0 * std::numbers::pi * i / segments;
    for (std::uint32_t j = 0; j < rings; ++j) {
      const double v = 2.0 * std::numbers::pi * j / rings;
      const double rr = major + minor * std::cos(v);
      m.vertices.emplace_back(rr * std::cos(u), rr * std::sin(u), minor * std::sin(v));
    }
  }
  auto id = [&](std::uint32_t i, std::uint32_t j) { return (i % segments) * rings + (j % rings); };
  for (std::uint32_t i = 0; i < segments; ++i)
    for (std::uint32_t j = 0; j < rings; ++j) {
      m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

/// Square in the z = 0 plane, centred at the origin.
inline TriMesh plane(double half_extent) {
  const double h = half_extent;
  TriMesh m;
  m.vertices = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

inline constexpr int kSphereSubdivisions = 5;

/// Built-in benchmark shapes; each fits the unit ball with its farthest
/// surface points at radius 1.
inline TriMesh by_name(std::string_view id) {
  if (id == "sphere") return icosphere(kSphereSubdivisions);
  if (id == "cube") return cube(1.0 / std::sqrt(3.0));
  if (id == "torus") return torus(0.7, 0.3, 96, 48);
  if (id == "plane") return plane(1.0 / std::sqrt(2.0));
  throw InvalidInput("unknown shape '" + std::string(id) + "' (expected sphere, cube, torus, plane)");
}

/// Area-uniform samples: face picked with probability proportional to its
/// area, then a uniform barycentric point inside it.
inline PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  detail::require(n >= 1, "sample: n must be >= 1");
  detail::require(!mesh.empty(), "sample: mesh has no faces");
  std::vector<double> cumulative(mesh.face_count());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const auto [a, b, c] = mesh.triangle(f);
    total += triangle_area(a, b, c);
    cumulative[f] = total;
  }
  Engine rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = uniform01(rng) * total;
    const auto f = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    const double r1 = std::sqrt(uniform01(rng));
    const double r2 = uniform01(rng);
    const auto [a, b, c] = mesh.triangle(f);
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

inline PointCloud sample_shape(std::string_view id, std::size_t n, std::uint64_t seed) {
  return sample_surface(by_name(id), n, seed);
}

}  // namespace ascent::shapes
