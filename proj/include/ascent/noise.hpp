#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "ascent/error.hpp"
#include "ascent/point_cloud.hpp"
#include "ascent/random.hpp"

namespace ascent {

enum class NoiseKind { gaussian, laplace, uniform };

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::uniform: return "uniform";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "laplace") return NoiseKind::laplace;
  if (s == "uniform") return NoiseKind::uniform;
  throw InvalidInput("unknown noise kind '" + std::string(s) + "'");
}

/// `level` is a fraction of the cloud's bounding-sphere radius r; it sets the
/// per-axis scale parameter: gaussian sigma, laplace b, or uniform half-width.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double level = 0.01;
  std::uint64_t seed = 0;
};

/// Per-axis standard deviation produced by `spec` on a cloud of radius r.
inline double noise_stddev(const NoiseSpec& spec, double radius) {
  const double s = spec.level * radius;
  switch (spec.kind) {
    case NoiseKind::gaussian: return s;
    case NoiseKind::laplace: return std::sqrt(2.0) * s;
    case NoiseKind::uniform: return s / std::sqrt(3.0);
  }
  return s;
}

/// Adds independent per-axis noise to every point. Deterministic in
/// (cloud, spec): points are visited in order, axes x, y, z.
inline PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& spec) {
  validate(cloud);
  detail::require(spec.level > 0.0 && std::isfinite(spec.level), "noise level must be positive");
  const double scale = spec.level * bounding_radius(cloud.points);

  Engine rng(spec.seed);
  NormalSource normal(rng);
  PointCloud out = cloud;
  for (auto& p : out.points) {
    for (int axis = 0; axis < 3; ++axis) {
      double e = 0.0;
      switch (spec.kind) {
        case NoiseKind::gaussian: e = scale * normal(); break;
        case NoiseKind::laplace: e = laplace(rng, scale); break;
        case NoiseKind::uniform: e = scale * (2.0 * uniform01(rng) - 1.0); break;
      }
      p[axis] += e;
    }
  }
  return out;
}

}  // namespace ascent
