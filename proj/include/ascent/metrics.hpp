#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ascent/error.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/mesh.hpp"
#include "ascent/parallel.hpp"
#include "ascent/point_cloud.hpp"

namespace ascent {

inline constexpr const char* kChamferDefinition =
    "mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2";
inline constexpr const char* kP2mDefinition = "mean_p min_face |p-face|^2 (point to face only)";
inline constexpr double kDisplayScale = 1e4;

namespace detail {

inline double mean_nn_sq(const PointCloud& from, const KdTree& to, std::size_t threads) {
  std::vector<double> d(from.size());
  parallel_for(from.size(), threads, [&](std::size_t i) { d[i] = to.nearest(from[i]).dist2; });
  return pairwise_mean(d);
}

}  // namespace detail

/// Symmetric Chamfer distance with squared distances and per-side means.
inline double chamfer_distance(const PointCloud& a, const PointCloud& b, std::size_t threads = 1) {
  validate(a, "first cloud");
  validate(b, "second cloud");
  const KdTree ta(a.points), tb(b.points);
  return detail::mean_nn_sq(a, tb, threads) + detail::mean_nn_sq(b, ta, threads);
}

/// Mean squared distance from each point to the nearest mesh face.
inline double point_to_mesh(const PointCloud& cloud, const SurfaceLocator& surface,
                            std::size_t threads = 1) {
  validate(cloud);
  std::vector<double> d(cloud.size());
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    const double r = surface.nearest(cloud[i]).distance;
    d[i] = r * r;
  });
  return pairwise_mean(d);
}

inline double point_to_mesh(const PointCloud& cloud, const TriMesh& mesh, std::size_t threads = 1) {
  detail::require(!mesh.empty(), "point_to_mesh: mesh has no faces");
  return point_to_mesh(cloud, SurfaceLocator(mesh), threads);
}

/// Raw metric values; the x1e4 display convention is applied on output only.
struct MetricReport {
  double cd = 0.0;
  std::optional<double> p2m;
  std::size_t n_points = 0;
  std::string denoised_path;
  std::string clean_path;
  std::string mesh_path;
  std::string config_hash;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["cd"] = cd;
    j["p2m"] = p2m ? nlohmann::ordered_json(*p2m) : nlohmann::ordered_json(nullptr);
    j["display_scale"] = kDisplayScale;
    j["cd_display"] = cd * kDisplayScale;
    j["p2m_display"] = p2m ? nlohmann::ordered_json(*p2m * kDisplayScale) : nlohmann::ordered_json(nullptr);
    j["n_points"] = n_points;
    j["cd_definition"] = kChamferDefinition;
    j["p2m_definition"] = kP2mDefinition;
    j["provenance"] = {{"denoised", denoised_path},
                       {"clean", clean_path},
                       {"mesh", mesh_path},
                       {"config_hash", config_hash}};
    return j;
  }

  static MetricReport from_json(const nlohmann::json& j) {
    MetricReport r;
    r.cd = j.at("cd").get<double>();
    if (!j.at("p2m").is_null()) r.p2m = j.at("p2m").get<double>();
    r.n_points = j.at("n_points").get<std::size_t>();
    const auto& p = j.at("provenance");
    r.denoised_path = p.at("denoised").get<std::string>();
    r.clean_path = p.at("clean").get<std::string>();
    r.mesh_path = p.at("mesh").get<std::string>();
    r.config_hash = p.at("config_hash").get<std::string>();
    detail::require(r.cd >= 0.0 && (!r.p2m || *r.p2m >= 0.0), "metric report: negative metric");
    return r;
  }

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hex FNV-1a, used to fingerprint configs and plans.
inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = fnv1a(s);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

}  // namespace ascent
