#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/mesh.hpp"
#include "ascent/point_cloud.hpp"

namespace ascent {

/// A gradient field ĝ_i(x): for anchor i of the construction cloud, the
/// displacement from x towards the surface. Built once, then immutable;
/// query() must be safe for concurrent callers.
class GradientField {
 public:
  virtual ~GradientField() = default;

  virtual std::string_view provider() const = 0;
  virtual std::size_t anchor_count() const = 0;
  virtual Vec3 query(std::size_t anchor, const Vec3& x) const = 0;

  /// True when query() ignores the anchor; lets the ensemble skip repeats.
  virtual bool anchor_independent() const { return false; }

 protected:
  void check_anchor(std::size_t anchor) const {
    if (anchor >= anchor_count())
      throw InvalidInput("anchor index " + std::to_string(anchor) + " out of range (" +
                         std::to_string(anchor_count()) + " anchors)");
  }
};

/// Exact displacement from x to the nearest point of `mesh`.
inline Vec3 oracle_query(const TriMesh& mesh, const Vec3& x) {
  return nearest_surface_point(mesh, x).point - x;
}

/// Ground-truth field from a reference mesh; identical for every anchor.
class OracleField final : public GradientField {
 public:
  OracleField(std::shared_ptr<const SurfaceLocator> locator, std::size_t anchors)
      : locator_(std::move(locator)), anchors_(anchors) {
    detail::require(locator_ != nullptr, "oracle field needs a mesh");
  }
  OracleField(TriMesh mesh, std::size_t anchors)
      : OracleField(std::make_shared<const SurfaceLocator>(std::move(mesh)), anchors) {}

  std::string_view provider() const override { return "oracle"; }
  std::size_t anchor_count() const override { return anchors_; }
  bool anchor_independent() const override { return true; }

  Vec3 query(std::size_t anchor, const Vec3& x) const override {
    check_anchor(anchor);
    return locator_->nearest(x).point - x;
  }

  const SurfaceLocator& locator() const { return *locator_; }

 private:
  std::shared_ptr<const SurfaceLocator> locator_;
  std::size_t anchors_;
};

/// PCA plane through a point set: centroid and unit normal (smallest
/// eigenvector), plus the sorted eigenvalues of the scatter matrix.
struct LocalPlane {
  Vec3 centroid;
  Vec3 normal;
  Vec3 eigenvalues;  // ascending
  Eigen::Matrix3d axes;  // columns match eigenvalues
};

inline LocalPlane fit_plane(std::span<const Vec3> pts) {
  detail::require(pts.size() >= 3, "plane fit needs at least 3 points");
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - c;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  return {c, es.eigenvectors().col(0).normalized(), es.eigenvalues(), es.eigenvectors()};
}

/// Gathers {x_i} ∪ H(x_i; k) in graph order.
inline std::vector<Vec3> neighborhood(const PointCloud& cloud, const NeighborGraph& graph,
                                      std::size_t i) {
  std::vector<Vec3> pts;
  pts.reserve(graph.k + 1);
  pts.push_back(cloud[i]);
  for (auto j : graph.neighbors(i)) pts.push_back(cloud[j]);
  return pts;
}

/// Training-free field: each anchor carries the PCA plane of its
/// neighbourhood, and a query returns the displacement onto that plane.
class MlsField final : public GradientField {
 public:
  MlsField(std::vector<Vec3> centroids, std::vector<Vec3> normals)
      : centroids_(std::move(centroids)), normals_(std::move(normals)) {
    detail::require(centroids_.size() == normals_.size(), "mls field: size mismatch");
  }

  std::string_view provider() const override { return "mls"; }
  std::size_t anchor_count() const override { return centroids_.size(); }

  Vec3 query(std::size_t anchor, const Vec3& x) const override {
    check_anchor(anchor);
    const Vec3& n = normals_[anchor];
    return -((x - centroids_[anchor]).dot(n)) * n;
  }

  const std::vector<Vec3>& centroids() const { return centroids_; }
  const std::vector<Vec3>& normals() const { return normals_; }

 private:
  std::vector<Vec3> centroids_;
  std::vector<Vec3> normals_;
};

/// Fits one plane per anchor over {x_i} ∪ H(x_i; k). Normals are flipped to
/// face away from the cloud centroid.
inline MlsField build_mls_field(const PointCloud& cloud, const NeighborGraph& graph) {
  validate(cloud);
  detail::require(graph.size() == cloud.size(), "mls field: graph/cloud size mismatch");
  detail::require(graph.k >= 3, "mls field: plane fit needs k >= 3");
  const Vec3 center = centroid(cloud.points);
  std::vector<Vec3> centroids(cloud.size()), normals(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto plane = fit_plane(neighborhood(cloud, graph, i));
    centroids[i] = plane.centroid;
    normals[i] = plane.normal.dot(cloud[i] - center) < 0.0 ? Vec3(-plane.normal) : plane.normal;
  }
  return MlsField(std::move(centroids), std::move(normals));
}

/// Default plane-fit neighbourhood: grows with the point count so the fit
/// covers a similar patch of surface, N / 125 clamped to [8, 64].
inline std::size_t auto_fit_knn(std::size_t n) { return std::clamp<std::size_t>(n / 125, 8, 64); }

/// `requested` = 0 selects auto_fit_knn.
inline std::size_t resolve_fit_knn(std::size_t requested, std::size_t n) {
  return requested > 0 ? requested : auto_fit_knn(n);
}

inline Vec3 mls_query(const MlsField& field, std::size_t i, const Vec3& x) {
  return field.query(i, x);
}

/// z_i(x): mean of the anchors' fields over H(x_i; k), all evaluated at x.
inline Vec3 ensemble_gradient(const GradientField& field, const NeighborGraph& graph,
                              std::size_t i, const Vec3& x) {
  detail::require(field.anchor_count() == graph.size(),
                  "ensemble: field has " + std::to_string(field.anchor_count()) +
                      " anchors but graph has " + std::to_string(graph.size()) + " points");
  detail::require(i < graph.size(), "ensemble: point index out of range");
  const auto nbrs = graph.neighbors(i);
  if (field.anchor_independent()) return field.query(nbrs.front(), x);

  const Vec3 first = field.query(nbrs.front(), x);
  Vec3 sum = first;
  bool constant = true;
  for (std::size_t j = 1; j < nbrs.size(); ++j) {
    const Vec3 g = field.query(nbrs[j], x);
    constant = constant && g == first;
    sum += g;
  }
  // The mean of identical vectors is that vector; skip the rounding of sum/k.
  if (constant) return first;
  return sum / static_cast<double>(nbrs.size());
}

}  // namespace ascent
