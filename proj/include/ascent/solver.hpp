#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/fields.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/parallel.hpp"
#include "ascent/point_cloud.hpp"

namespace ascent {

/// Momentum ascent hyper-parameters:
///   v(t) = alpha * z(x(t-1)) + (1 - alpha) * v(t-1)
///   x(t) = x(t-1) + beta * gamma^t * v(t),   t = 1..steps
/// alpha = 1 is classical gradient ascent.
struct AscentConfig {
  std::size_t steps = 15;
  double alpha = 0.9;
  double beta = 0.2;
  double gamma = 0.95;
  std::size_t threads = 1;  ///< 0 = hardware concurrency; results do not depend on it

  void validate() const {
    detail::require(steps >= 1, "steps must be >= 1");
    detail::require(alpha > 0.0 && alpha <= 1.0, "alpha must be in (0, 1]");
    detail::require(beta > 0.0 && std::isfinite(beta), "beta must be > 0");
    detail::require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
  }
};

struct AscentState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::size_t t = 0;

  static AscentState start(std::span<const Vec3> initial) {
    AscentState s;
    s.positions.assign(initial.begin(), initial.end());
    s.velocities.assign(initial.size(), Vec3::Zero());
    return s;
  }
};

struct StepStats {
  std::size_t step = 0;
  double mean_gradient_norm = 0.0;
  double max_gradient_norm = 0.0;
  double mean_displacement = 0.0;
  double max_displacement = 0.0;
};

/// Per-step positions and statistics; entry 0 is the initial state.
struct Trajectory {
  std::vector<std::vector<Vec3>> positions;
  std::vector<StepStats> stats;
};

/// Applies one update in place. `gradients` must be the ensemble gradients at
/// the state's current positions. Returns per-step statistics.
inline StepStats advance(AscentState& state, std::span<const Vec3> gradients,
                         const AscentConfig& config) {
  config.validate();
  detail::require(state.t < config.steps, "ascent already ran all configured steps");
  detail::require(gradients.size() == state.positions.size() &&
                      state.velocities.size() == state.positions.size(),
                  "gradient count does not match point count");
  for (std::size_t i = 0; i < gradients.size(); ++i)
    if (!gradients[i].allFinite())
      throw NumericalError("non-finite gradient at point " + std::to_string(i) + " in step " +
                           std::to_string(state.t + 1));

  const std::size_t t = state.t + 1;
  const double step = config.beta * std::pow(config.gamma, static_cast<double>(t));
  const double keep = 1.0 - config.alpha;

  StepStats stats;
  stats.step = t;
  std::vector<double> gnorm(gradients.size()), disp(gradients.size());
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    Vec3& v = state.velocities[i];
    v = config.alpha * gradients[i] + keep * v;
    const Vec3 delta = step * v;
    state.positions[i] += delta;
    gnorm[i] = gradients[i].norm();
    disp[i] = delta.norm();
    stats.max_gradient_norm = std::max(stats.max_gradient_norm, gnorm[i]);
    stats.max_displacement = std::max(stats.max_displacement, disp[i]);
  }
  stats.mean_gradient_norm = pairwise_mean(gnorm);
  stats.mean_displacement = pairwise_mean(disp);
  state.t = t;
  return stats;
}

inline AscentState momentum_step(AscentState state, std::span<const Vec3> gradients,
                                 const AscentConfig& config) {
  advance(state, gradients, config);
  return state;
}

/// z_i at every current position. Reads positions only; each worker writes
/// its own output slots, so the result is independent of thread count.
inline std::vector<Vec3> ensemble_gradients(const GradientField& field, const NeighborGraph& graph,
                                            std::span<const Vec3> positions, std::size_t threads) {
  std::vector<Vec3> out(positions.size());
  parallel_for(positions.size(), threads,
               [&](std::size_t i) { out[i] = ensemble_gradient(field, graph, i, positions[i]); });
  return out;
}

struct DenoiseResult {
  PointCloud cloud;
  std::optional<Trajectory> trajectory;
};

/// Runs config.steps momentum steps from x(0) = cloud. Field and graph must
/// be built from `cloud` (anchors stay fixed while positions move). Output is
/// mapped back to model units when the cloud carries a normalization.
inline DenoiseResult denoise(const PointCloud& cloud, const GradientField& field,
                             const NeighborGraph& graph, const AscentConfig& config,
                             bool record = false) {
  validate(cloud);
  config.validate();
  detail::require(graph.size() == cloud.size() && field.anchor_count() == cloud.size(),
                  "denoise: field/graph were not built from this cloud");

  AscentState state = AscentState::start(cloud.points);
  DenoiseResult result;
  if (record) {
    result.trajectory.emplace();
    result.trajectory->positions.push_back(state.positions);
    result.trajectory->stats.push_back({});
  }
  for (std::size_t s = 0; s < config.steps; ++s) {
    const auto z = ensemble_gradients(field, graph, state.positions, config.threads);
    const auto stats = advance(state, z, config);
    if (record) {
      result.trajectory->positions.push_back(state.positions);
      result.trajectory->stats.push_back(stats);
    }
  }
  PointCloud out(std::move(state.positions));
  out.transform = cloud.transform;
  result.cloud = denormalize(out);
  return result;
}

/// Classical gradient ascent baseline: denoise with alpha forced to 1.
inline DenoiseResult classical_denoise(const PointCloud& cloud, const GradientField& field,
                                       const NeighborGraph& graph, AscentConfig config,
                                       bool record = false) {
  config.alpha = 1.0;
  return denoise(cloud, field, graph, config, record);
}

/// One JSON object per step: step, mean gradient magnitude, mean displacement.
inline void write_trace(std::ostream& out, const Trajectory& traj) {
  out.precision(17);
  for (const auto& s : traj.stats)
    out << "{\"step\":" << s.step << ",\"mean_gradient_norm\":" << s.mean_gradient_norm
        << ",\"mean_displacement\":" << s.mean_displacement
        << ",\"max_gradient_norm\":" << s.max_gradient_norm
        << ",\"max_displacement\":" << s.max_displacement << "}\n";
}

}  // namespace ascent
