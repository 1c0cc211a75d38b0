#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/point_cloud.hpp"

namespace ascent {

struct Neighbor {
  std::size_t index;
  double dist2;

  /// Distance first, lower index wins ties.
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree over a point set for exact k-nearest-neighbour queries.
/// Immutable after construction; queries are safe from concurrent readers.
class KdTree {
 public:
  static constexpr std::size_t kNoExclusion = std::numeric_limits<std::size_t>::max();

  KdTree() = default;

  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    detail::require(!points_.empty(), "kd-tree over empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// The k nearest points to `query` sorted by (distance, index).
  /// `exclude` removes one index from consideration (the query point itself).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                            std::size_t exclude = kNoExclusion) const {
    std::vector<Neighbor> heap;
    if (k == 0 || points_.empty()) return heap;
    heap.reserve(k + 1);
    search(0, query, k, exclude, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  Neighbor nearest(const Vec3& query) const {
    Neighbor best{kNoExclusion, std::numeric_limits<double>::infinity()};
    search_nearest(0, query, best);
    return best;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;
  static constexpr std::uint32_t kLeaf = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::size_t begin, end;
    std::uint32_t dim;  // kLeaf for leaves
    double split;
    std::size_t left, right;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end, kLeaf, 0.0, 0, 0});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    Eigen::Index dim;
    (hi - lo).maxCoeff(&dim);
    if (hi[dim] == lo[dim]) return id;  // all coincident: keep as a leaf

    const std::size_t mid = begin + (end - begin) / 2;
    auto less = [&](std::size_t a, std::size_t b) {
      const double ca = points_[a][dim], cb = points_[b][dim];
      return ca < cb || (ca == cb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);
    const double split = points_[order_[mid]][dim];

    nodes_[id].dim = static_cast<std::uint32_t>(dim);
    nodes_[id].split = split;
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::size_t id, const Vec3& q, std::size_t k, std::size_t exclude,
              std::vector<Neighbor>& heap) const {
    const Node& n = nodes_[id];
    if (n.dim == kLeaf) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        if (idx == exclude) continue;
        const Neighbor cand{idx, squared_distance(q, points_[idx])};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double diff = q[n.dim] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    search(near, q, k, exclude, heap);
    // <= keeps equal-distance candidates reachable for the index tie-break.
    if (heap.size() < k || diff * diff <= heap.front().dist2) search(far, q, k, exclude, heap);
  }

  void search_nearest(std::size_t id, const Vec3& q, Neighbor& best) const {
    const Node& n = nodes_[id];
    if (n.dim == kLeaf) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Neighbor cand{order_[i], squared_distance(q, points_[order_[i]])};
        if (cand < best) best = cand;
      }
      return;
    }
    const double diff = q[n.dim] - n.split;
    search_nearest(diff < 0.0 ? n.left : n.right, q, best);
    if (diff * diff <= best.dist2) search_nearest(diff < 0.0 ? n.right : n.left, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Per-point k-nearest-neighbour lists, H(x_i; k), built once and read-only.
struct NeighborGraph {
  std::size_t k = 0;            ///< entries per list actually stored
  std::size_t requested_k = 0;  ///< k asked for by the caller
  bool truncated = false;       ///< requested_k >= N forced k = N - 1
  std::vector<std::size_t> indices;  ///< row-major, size() * k

  std::size_t size() const { return k == 0 ? 0 : indices.size() / k; }

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return std::span<const std::size_t>(indices).subspan(i * k, k);
  }
};

/// Exact kNN graph; each list excludes the point itself and is sorted by
/// ascending distance with ties broken by lower index.
inline NeighborGraph build_knn_graph(const PointCloud& cloud, std::size_t k) {
  validate(cloud);
  detail::require(k >= 1, "knn: k must be >= 1");
  detail::require(cloud.size() >= 2, "knn: need at least 2 points");
  NeighborGraph g;
  g.requested_k = k;
  g.k = std::min(k, cloud.size() - 1);
  g.truncated = g.k < k;
  g.indices.resize(cloud.size() * g.k);

  const KdTree tree(cloud.points);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud[i], g.k, i);
    for (std::size_t j = 0; j < g.k; ++j) g.indices[i * g.k + j] = nn[j].index;
  }
  return g;
}

}  // namespace ascent
