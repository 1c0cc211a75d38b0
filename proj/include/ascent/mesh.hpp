#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/point_cloud.hpp"

namespace ascent {

using Face = std::array<std::uint32_t, 3>;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::size_t face_count() const { return faces.size(); }
  bool empty() const { return faces.empty(); }

  std::array<Vec3, 3> triangle(std::size_t f) const {
    const Face& t = faces[f];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

inline bool is_degenerate(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double longest2 =
      std::max({squared_distance(a, b), squared_distance(b, c), squared_distance(c, a)});
  const double twice_area = (b - a).cross(c - a).norm();
  return !(twice_area > 1e-14 * longest2);
}

/// Validates indices and drops zero-area faces. Returns the number dropped.
inline std::size_t sanitize(TriMesh& mesh) {
  detail::require(all_finite(mesh.vertices), "mesh contains non-finite vertices");
  for (const Face& f : mesh.faces)
    for (auto v : f)
      detail::require(v < mesh.vertices.size(), "mesh face index out of range");
  const auto before = mesh.faces.size();
  std::erase_if(mesh.faces, [&](const Face& f) {
    return is_degenerate(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
  });
  return before - mesh.faces.size();
}

inline TriMesh transformed(const TriMesh& mesh, const NormTransform& t) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

/// Closest point on triangle (a, b, c) to p, resolving vertex, edge and face
/// regions via barycentric tests.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

struct SurfacePoint {
  Vec3 point;
  double distance;
  std::size_t face;
};

namespace detail {

struct FaceHit {
  Vec3 point;
  double dist2;
  std::size_t face;
  bool better_than(const FaceHit& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && face < o.face);
  }
};

inline FaceHit face_hit(const TriMesh& mesh, std::size_t f, const Vec3& q) {
  const auto [a, b, c] = mesh.triangle(f);
  const Vec3 p = closest_point_on_triangle(q, a, b, c);
  return {p, squared_distance(q, p), f};
}

}  // namespace detail

/// Linear scan over all faces. Ties go to the lower face index.
inline SurfacePoint nearest_surface_point(const TriMesh& mesh, const Vec3& q) {
  detail::require(!mesh.empty(), "nearest_surface_point: mesh has no faces");
  detail::FaceHit best{Vec3::Zero(), std::numeric_limits<double>::infinity(), 0};
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const auto hit = detail::face_hit(mesh, f, q);
    if (hit.better_than(best)) best = hit;
  }
  return {best.point, std::sqrt(best.dist2), best.face};
}

/// Bounding-volume hierarchy over a mesh's faces for nearest-surface queries.
/// Returns exactly what nearest_surface_point returns. Read-only after build.
class SurfaceLocator {
 public:
  explicit SurfaceLocator(TriMesh mesh) : mesh_(std::move(mesh)) {
    detail::require(!mesh_.empty(), "surface locator: mesh has no faces");
    const std::size_t n = mesh_.face_count();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    boxes_.resize(n);
    centers_.resize(n);
    Box all;
    for (std::size_t f = 0; f < n; ++f) {
      const auto [a, b, c] = mesh_.triangle(f);
      boxes_[f] = {a.cwiseMin(b).cwiseMin(c), a.cwiseMax(b).cwiseMax(c)};
      centers_[f] = (a + b + c) / 3.0;
      all.grow(boxes_[f]);
    }
    // Slack so a rounded closest point never falls outside its face's box.
    pad_ = 1e-9 * std::max(1.0, (all.hi - all.lo).maxCoeff());
    nodes_.reserve(2 * n);
    build(0, n);
  }

  const TriMesh& mesh() const { return mesh_; }

  SurfacePoint nearest(const Vec3& q) const {
    detail::FaceHit best{Vec3::Zero(), std::numeric_limits<double>::infinity(), 0};
    std::array<std::size_t, 128> stack{};
    std::size_t top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (n.box.dist2(q) > best.dist2) continue;
      if (n.count > 0) {
        for (std::size_t i = n.first; i < n.first + n.count; ++i) {
          const auto hit = detail::face_hit(mesh_, order_[i], q);
          if (hit.better_than(best)) best = hit;
        }
        continue;
      }
      const double dl = nodes_[n.left].box.dist2(q);
      const double dr = nodes_[n.right].box.dist2(q);
      // push the farther child first so the nearer one is popped next
      if (dl <= dr) {
        stack[top++] = n.right;
        stack[top++] = n.left;
      } else {
        stack[top++] = n.left;
        stack[top++] = n.right;
      }
    }
    return {best.point, std::sqrt(best.dist2), best.face};
  }

 private:
  struct Box {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    void grow(const Box& o) {
      lo = lo.cwiseMin(o.lo);
      hi = hi.cwiseMax(o.hi);
    }
    double dist2(const Vec3& q) const {
      const Vec3 d = (lo - q).cwiseMax(q - hi).cwiseMax(0.0);
      return d.squaredNorm();
    }
  };

  struct Node {
    Box box;
    std::size_t first = 0, count = 0;  // count > 0 marks a leaf
    std::size_t left = 0, right = 0;
  };

  static constexpr std::size_t kLeafFaces = 4;

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    Box box, cbox;
    for (std::size_t i = begin; i < end; ++i) {
      box.grow(boxes_[order_[i]]);
      cbox.grow({centers_[order_[i]], centers_[order_[i]]});
    }
    box.lo.array() -= pad_;
    box.hi.array() += pad_;
    nodes_[id].box = box;

    Eigen::Index dim;
    const double extent = (cbox.hi - cbox.lo).maxCoeff(&dim);
    if (end - begin <= kLeafFaces || extent <= 0.0) {
      nodes_[id].first = begin;
      nodes_[id].count = end - begin;
      return id;
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double ca = centers_[a][dim], cb = centers_[b][dim];
                       return ca < cb || (ca == cb && a < b);
                     });
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  TriMesh mesh_;
  std::vector<std::size_t> order_;
  std::vector<Box> boxes_;
  std::vector<Vec3> centers_;
  std::vector<Node> nodes_;
  double pad_ = 0.0;
};

}  // namespace ascent
