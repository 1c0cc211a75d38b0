#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ascent/error.hpp"

namespace ascent {

using Vec3 = Eigen::Vector3d;

/// Squared Euclidean distance with a fixed evaluation order. Every exactness
/// contract (kNN ties, Chamfer vs brute force) relies on this one formula.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Fixed-order pairwise summation. Result depends only on the input order.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_mean(std::span<const double> values) {
  return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

/// Centering and scaling that maps a cloud into the unit ball:
/// normalized = (p - center) / scale.
struct NormTransform {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) / scale; }
  Vec3 invert(const Vec3& q) const { return q * scale + center; }
};

struct PointCloud {
  std::vector<Vec3> points;
  /// Set when `points` are in the normalized frame of some source cloud.
  std::optional<NormTransform> transform;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Vec3& operator[](std::size_t i) const { return points[i]; }
  Vec3& operator[](std::size_t i) { return points[i]; }
};

inline bool all_finite(std::span<const Vec3> pts) {
  return std::all_of(pts.begin(), pts.end(), [](const Vec3& p) { return p.allFinite(); });
}

inline void validate(const PointCloud& cloud, const std::string& what = "point cloud") {
  detail::require(!cloud.empty(), what + " is empty");
  detail::require(all_finite(cloud.points), what + " contains non-finite coordinates");
}

inline Vec3 centroid(std::span<const Vec3> pts) {
  detail::require(!pts.empty(), "centroid of empty point set");
  std::vector<double> xs(pts.size()), ys(pts.size()), zs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs[i] = pts[i].x();
    ys[i] = pts[i].y();
    zs[i] = pts[i].z();
  }
  return Vec3(pairwise_mean(xs), pairwise_mean(ys), pairwise_mean(zs));
}

/// Radius of the centroid-centred bounding sphere (max distance to centroid).
inline double bounding_radius(std::span<const Vec3> pts) {
  const Vec3 c = centroid(pts);
  double r2 = 0.0;
  for (const auto& p : pts) r2 = std::max(r2, squared_distance(p, c));
  return std::sqrt(r2);
}

/// Centre at the centroid and scale so the farthest point has norm 1.
/// A cloud whose points all coincide gets scale 1.
inline std::pair<PointCloud, NormTransform> normalize(const PointCloud& cloud) {
  validate(cloud);
  NormTransform t;
  t.center = centroid(cloud.points);
  double r2 = 0.0;
  for (const auto& p : cloud.points) r2 = std::max(r2, squared_distance(p, t.center));
  const double r = std::sqrt(r2);
  t.scale = r > 0.0 ? r : 1.0;

  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.transform = t;
  return {std::move(out), t};
}

/// Map points back to model units. Clouds without a transform are returned as is.
inline PointCloud denormalize(const PointCloud& cloud) {
  if (!cloud.transform) return cloud;
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& q : cloud.points) out.points.push_back(cloud.transform->invert(q));
  return out;
}

}  // namespace ascent
