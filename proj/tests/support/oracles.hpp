#pragma once

// Slow, independent reference implementations used as test oracles.
// Nothing here shares code paths with the library beyond plain Vec3 math.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <ascent/ascent.hpp>

namespace oracle {

using ascent::Vec3;

inline double dist2(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// k nearest by full sort; ties by lower index; self excluded.
inline std::vector<std::size_t> knn(const std::vector<Vec3>& pts, std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (j != i) all.emplace_back(dist2(pts[i], pts[j]), j);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < std::min(k, all.size()); ++m) out.push_back(all[m].second);
  return out;
}

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

/// Plane projection if it lands inside (barycentric test), otherwise the best
/// of the three edge projections.
inline Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double nn = n.squaredNorm();
  const Vec3 q = p - ((p - a).dot(n) / nn) * n;
  const double u = (c - b).cross(q - b).dot(n);
  const double v = (a - c).cross(q - c).dot(n);
  const double w = (b - a).cross(q - a).dot(n);
  if (u >= 0 && v >= 0 && w >= 0) return q;
  Vec3 best = closest_on_segment(p, a, b);
  for (const Vec3& cand : {closest_on_segment(p, b, c), closest_on_segment(p, c, a)})
    if (dist2(p, cand) < dist2(p, best)) best = cand;
  return best;
}

struct Hit {
  Vec3 point;
  double d2;
};

inline Hit nearest_on_mesh(const ascent::TriMesh& mesh, const Vec3& q) {
  Hit best{Vec3::Zero(), std::numeric_limits<double>::infinity()};
  for (const auto& f : mesh.faces) {
    const Vec3 p = closest_on_triangle(q, mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    const double d = dist2(q, p);
    if (d < best.d2) best = {p, d};
  }
  return best;
}

inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  auto side = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    long double s = 0;
    for (const auto& p : from) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& q : to) m = std::min(m, dist2(p, q));
      s += m;
    }
    return static_cast<double>(s / from.size());
  };
  return side(a, b) + side(b, a);
}

inline double p2m(const std::vector<Vec3>& pts, const ascent::TriMesh& mesh) {
  long double s = 0;
  for (const auto& p : pts) s += nearest_on_mesh(mesh, p).d2;
  return static_cast<double>(s / pts.size());
}

/// Textbook classical ascent, written without the library's state machinery.
inline std::vector<Vec3> classical_ascent(const ascent::GradientField& field,
                                          const ascent::NeighborGraph& graph,
                                          std::vector<Vec3> x, std::size_t steps, double beta,
                                          double gamma) {
  for (std::size_t t = 1; t <= steps; ++t) {
    const double step = beta * std::pow(gamma, static_cast<double>(t));
    std::vector<Vec3> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = ascent::ensemble_gradient(field, graph, i, x[i]);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += step * z[i];
  }
  return x;
}

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), std::numeric_limits<double>::min());
  return std::abs(got - want) / scale;
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                       double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
  return out;
}

/// n random, non-degenerate triangles in the unit cube, unshared vertices.
inline ascent::TriMesh random_mesh(std::mt19937_64& rng, std::size_t faces) {
  ascent::TriMesh m;
  while (m.faces.size() < faces) {
    auto v = random_points(rng, 3);
    if ((v[1] - v[0]).cross(v[2] - v[0]).norm() < 1e-3) continue;
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), v.begin(), v.end());
    m.faces.push_back({base, base + 1, base + 2});
  }
  return m;
}

}  // namespace oracle
