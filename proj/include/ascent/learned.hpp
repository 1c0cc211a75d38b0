#pragma once

#include <Eigen/Core>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/fields.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/mesh.hpp"
#include "ascent/point_cloud.hpp"
#include "ascent/random.hpp"

namespace ascent {

// ---------------------------------------------------------------------------
// Local features f_i

inline constexpr std::size_t kFeatureDim = 7;

/// [0..2] scatter eigenvalues, descending, divided by their sum
/// [3]    mean neighbour distance / bounding radius
/// [4..6] displacement from the anchor onto its local PCA plane
using LocalFeature = std::array<double, kFeatureDim>;

inline LocalFeature extract_features(const PointCloud& cloud, const NeighborGraph& graph,
                                     std::size_t i, double radius) {
  detail::require(graph.k >= 3, "features: need k >= 3");
  detail::require(i < cloud.size() && graph.size() == cloud.size(), "features: bad index or graph");
  const auto plane = fit_plane(neighborhood(cloud, graph, i));

  LocalFeature f{};
  const Vec3 ev = plane.eigenvalues.cwiseMax(0.0);
  const double total = ev.sum();
  if (total > 0.0) {
    f[0] = ev[2] / total;
    f[1] = ev[1] / total;
    f[2] = ev[0] / total;
  } else {
    f[0] = f[1] = f[2] = 1.0 / 3.0;
  }
  double dsum = 0.0;
  for (auto j : graph.neighbors(i)) dsum += std::sqrt(squared_distance(cloud[i], cloud[j]));
  f[3] = radius > 0.0 ? dsum / static_cast<double>(graph.k) / radius : 0.0;
  const Vec3 offset = -((cloud[i] - plane.centroid).dot(plane.normal)) * plane.normal;
  f[4] = offset.x();
  f[5] = offset.y();
  f[6] = offset.z();
  return f;
}

inline LocalFeature extract_features(const PointCloud& cloud, const NeighborGraph& graph,
                                     std::size_t i) {
  return extract_features(cloud, graph, i, bounding_radius(cloud.points));
}

inline std::vector<LocalFeature> extract_all_features(const PointCloud& cloud,
                                                      const NeighborGraph& graph) {
  const double r = bounding_radius(cloud.points);
  std::vector<LocalFeature> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = extract_features(cloud, graph, i, r);
  return out;
}

// ---------------------------------------------------------------------------
// Perceptron G(relpos, f)

/// MLP with tanh hidden layers and a linear output layer. Inputs are
/// standardized with (in - shift) * scale; outputs are multiplied by
/// output_scale. Only weights and biases are trainable.
struct PerceptronParams {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;
  double output_scale = 1.0;
  std::uint32_t feature_k = 16;  // neighbourhood size used to build f_i

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t layer_count() const { return weights.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  static PerceptronParams zeros(std::vector<std::size_t> sizes) {
    detail::require(sizes.size() >= 2, "perceptron needs at least input and output layers");
    for (auto s : sizes) detail::require(s > 0, "perceptron layer size must be positive");
    PerceptronParams p;
    p.sizes = std::move(sizes);
    for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
      p.weights.push_back(Eigen::MatrixXd::Zero(p.sizes[l + 1], p.sizes[l]));
      p.biases.push_back(Eigen::VectorXd::Zero(p.sizes[l + 1]));
    }
    p.input_shift = Eigen::VectorXd::Zero(p.sizes.front());
    p.input_scale = Eigen::VectorXd::Ones(p.sizes.front());
    return p;
  }

  /// Glorot-uniform weights, zero biases.
  static PerceptronParams glorot(std::vector<std::size_t> sizes, std::uint64_t seed) {
    PerceptronParams p = zeros(std::move(sizes));
    Engine rng(seed);
    for (auto& w : p.weights) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = limit * (2.0 * uniform01(rng) - 1.0);
    }
    return p;
  }

  /// Visits every trainable scalar in a fixed order (layer, weights col-major, biases).
  template <class Fn>
  void for_each_parameter(Fn&& fn) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index k = 0; k < weights[l].size(); ++k) fn(weights[l].data()[k]);
      for (Eigen::Index k = 0; k < biases[l].size(); ++k) fn(biases[l].data()[k]);
    }
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    const_cast<PerceptronParams*>(this)->for_each_parameter([&](double& v) { out.push_back(v); });
    return out;
  }

  void assign(std::span<const double> flat) {
    detail::require(flat.size() == parameter_count(), "perceptron: parameter vector size mismatch");
    std::size_t k = 0;
    for_each_parameter([&](double& v) { v = flat[k++]; });
  }

  bool all_finite() const {
    bool ok = input_shift.allFinite() && input_scale.allFinite() && std::isfinite(output_scale);
    for (std::size_t l = 0; l < weights.size(); ++l)
      ok = ok && weights[l].allFinite() && biases[l].allFinite();
    return ok;
  }

  friend bool operator==(const PerceptronParams& a, const PerceptronParams& b) {
    if (a.sizes != b.sizes || a.output_scale != b.output_scale || a.feature_k != b.feature_k ||
        a.input_shift != b.input_shift || a.input_scale != b.input_scale)
      return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
      if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
    return true;
  }
};

inline Eigen::VectorXd assemble_input(const Vec3& relpos, std::span<const double> feat) {
  Eigen::VectorXd in(3 + feat.size());
  in.head<3>() = relpos;
  for (std::size_t k = 0; k < feat.size(); ++k) in[3 + static_cast<Eigen::Index>(k)] = feat[k];
  return in;
}

inline Vec3 mlp_forward(const PerceptronParams& params, const Vec3& relpos,
                        std::span<const double> feat) {
  if (3 + feat.size() != params.input_dim() || params.sizes.back() != 3)
    throw InvalidInput("mlp_forward: expected input dim " + std::to_string(params.input_dim()) +
                       ", got " + std::to_string(3 + feat.size()));
  Eigen::VectorXd a =
      (assemble_input(relpos, feat) - params.input_shift).cwiseProduct(params.input_scale);
  const std::size_t last = params.layer_count() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Eigen::VectorXd z = params.weights[l] * a + params.biases[l];
    a = l == last ? z : Eigen::VectorXd(z.array().tanh().matrix());
  }
  return params.output_scale * Vec3(a[0], a[1], a[2]);
}

struct TrainingExample {
  Vec3 relpos;
  LocalFeature feature;
  Vec3 target;
};

struct LossAndGrad {
  double loss = 0.0;
  PerceptronParams grad;  // same shapes as the params; only weights/biases meaningful
};

/// Mean squared error over the batch and its exact gradient by backpropagation.
inline LossAndGrad loss_and_grad(const PerceptronParams& params,
                                 std::span<const TrainingExample> batch) {
  detail::require(!batch.empty(), "loss_and_grad: empty batch");
  detail::require(params.input_dim() == 3 + kFeatureDim && params.sizes.back() == 3,
                  "loss_and_grad: perceptron dimensions do not match features");
  const auto B = static_cast<Eigen::Index>(batch.size());
  const std::size_t L = params.layer_count();

  Eigen::MatrixXd x(params.input_dim(), B);
  Eigen::MatrixXd target(3, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    x.col(b) = assemble_input(batch[b].relpos, batch[b].feature);
    target.col(b) = batch[b].target;
  }
  x = (x.colwise() - params.input_shift).array().colwise() * params.input_scale.array();

  std::vector<Eigen::MatrixXd> act(L + 1);
  act[0] = std::move(x);
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = (params.weights[l] * act[l]).colwise() + params.biases[l];
    act[l + 1] = l + 1 == L ? std::move(z) : Eigen::MatrixXd(z.array().tanh().matrix());
  }
  const Eigen::MatrixXd residual = params.output_scale * act[L] - target;

  LossAndGrad out;
  out.loss = residual.squaredNorm() / static_cast<double>(B);
  out.grad = PerceptronParams::zeros(params.sizes);

  Eigen::MatrixXd delta = (2.0 * params.output_scale / static_cast<double>(B)) * residual;
  for (std::size_t l = L; l-- > 0;) {
    out.grad.weights[l].noalias() = delta * act[l].transpose();
    out.grad.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.weights[l].transpose() * delta;
      delta = back.array() * (1.0 - act[l].array().square());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double sample_sigma = 0.03;     ///< std of N(x_i), fraction of bounding radius
  std::size_t samples_per_anchor = 16;
  double learning_rate = 0.1;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t feature_k = 16;
};

using CleanReference = std::variant<TriMesh, PointCloud>;

struct TrainResult {
  PerceptronParams params;
  PerceptronParams initial;
  std::vector<double> epoch_loss;  ///< mean minibatch loss per epoch
};

/// Callable g(x) giving the displacement to the clean reference.
inline std::function<Vec3(const Vec3&)> make_target(const CleanReference& ref) {
  if (const auto* mesh = std::get_if<TriMesh>(&ref)) {
    auto loc = std::make_shared<const SurfaceLocator>(*mesh);
    return [loc](const Vec3& x) { return Vec3(loc->nearest(x).point - x); };
  }
  const auto& clean = std::get<PointCloud>(ref);
  validate(clean, "clean reference");
  auto tree = std::make_shared<const KdTree>(clean.points);
  return [tree](const Vec3& x) { return Vec3(tree->points()[tree->nearest(x).index] - x); };
}

/// Draws M samples per anchor from an isotropic Gaussian around it and labels
/// them with the displacement to the clean reference.
inline std::vector<TrainingExample> make_examples(const PointCloud& noisy,
                                                  std::span<const LocalFeature> features,
                                                  const std::function<Vec3(const Vec3&)>& target,
                                                  double sigma, std::size_t per_anchor,
                                                  std::uint64_t seed) {
  Engine rng(seed);
  NormalSource normal(rng);
  std::vector<TrainingExample> out;
  out.reserve(noisy.size() * per_anchor);
  for (std::size_t i = 0; i < noisy.size(); ++i)
    for (std::size_t m = 0; m < per_anchor; ++m) {
      const Vec3 rel(sigma * normal(), sigma * normal(), sigma * normal());
      out.push_back({rel, features[i], target(noisy[i] + rel)});
    }
  return out;
}

namespace detail {

inline void fit_standardization(PerceptronParams& p, std::span<const TrainingExample> data) {
  const auto dim = static_cast<Eigen::Index>(p.input_dim());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim), sq = Eigen::VectorXd::Zero(dim);
  double tsq = 0.0;
  for (const auto& e : data) {
    const Eigen::VectorXd in = assemble_input(e.relpos, e.feature);
    mean += in;
    sq += in.cwiseProduct(in);
    tsq += e.target.squaredNorm();
  }
  const double n = static_cast<double>(data.size());
  mean /= n;
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double var = std::max(sq[k] / n - mean[k] * mean[k], 0.0);
    const double sd = std::sqrt(var);
    p.input_shift[k] = mean[k];
    p.input_scale[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  const double rms = std::sqrt(tsq / (3.0 * n));
  p.output_scale = rms > 1e-12 ? rms : 1.0;
}

}  // namespace detail

/// Plain minibatch SGD on the mean-squared displacement loss. Deterministic
/// for a fixed config: sampling, initialization and shuffles all derive from
/// config.seed.
inline TrainResult train_field(const CleanReference& clean_ref, const PointCloud& noisy,
                               const TrainConfig& config) {
  validate(noisy, "noisy cloud");
  detail::require(config.sample_sigma > 0 && config.samples_per_anchor > 0 &&
                      config.learning_rate >= 0 && config.epochs > 0 && config.batch_size > 0,
                  "train config values must be positive");
  const NeighborGraph graph = build_knn_graph(noisy, config.feature_k);
  detail::require(graph.k >= 3, "train: need at least 4 points for features");
  const auto features = extract_all_features(noisy, graph);
  const double radius = bounding_radius(noisy.points);

  auto examples = make_examples(noisy, features, make_target(clean_ref),
                                config.sample_sigma * radius, config.samples_per_anchor,
                                derive_seed(config.seed, 1));

  std::vector<std::size_t> sizes{3 + kFeatureDim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(3);
  TrainResult result;
  result.params = PerceptronParams::glorot(sizes, derive_seed(config.seed, 2));
  result.params.feature_k = static_cast<std::uint32_t>(config.feature_k);
  detail::fit_standardization(result.params, examples);
  result.initial = result.params;

  Engine shuffle_rng(derive_seed(config.seed, 3));
  std::vector<double> flat = result.params.flatten();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<TrainingExample>(examples), shuffle_rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < examples.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, examples.size() - start);
      const auto lg = loss_and_grad(result.params, std::span(examples).subspan(start, n));
      if (!std::isfinite(lg.loss))
        throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1) +
                             ", example " + std::to_string(start) + " (loss is not finite)");
      weighted += lg.loss * static_cast<double>(n);
      const auto g = lg.grad.flatten();
      for (std::size_t k = 0; k < flat.size(); ++k) flat[k] -= config.learning_rate * g[k];
      result.params.assign(flat);
    }
    result.epoch_loss.push_back(weighted / static_cast<double>(examples.size()));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Field

/// ĝ_i(x) = G(x - x_i, f_i), with anchors and features fixed from the input cloud.
class LearnedField final : public GradientField {
 public:
  LearnedField(PerceptronParams params, std::vector<Vec3> anchors,
               std::vector<LocalFeature> features)
      : params_(std::move(params)), anchors_(std::move(anchors)), features_(std::move(features)) {
    detail::require(anchors_.size() == features_.size(), "learned field: size mismatch");
  }

  std::string_view provider() const override { return "learned"; }
  std::size_t anchor_count() const override { return anchors_.size(); }

  Vec3 query(std::size_t anchor, const Vec3& x) const override {
    check_anchor(anchor);
    return mlp_forward(params_, x - anchors_[anchor], features_[anchor]);
  }

  const PerceptronParams& params() const { return params_; }
  const LocalFeature& feature(std::size_t i) const { return features_[i]; }

 private:
  PerceptronParams params_;
  std::vector<Vec3> anchors_;
  std::vector<LocalFeature> features_;
};

inline LearnedField build_learned_field(const PointCloud& cloud, PerceptronParams params) {
  validate(cloud);
  const auto graph = build_knn_graph(cloud, params.feature_k);
  auto features = extract_all_features(cloud, graph);
  return LearnedField(std::move(params), cloud.points, std::move(features));
}

inline Vec3 learned_query(const LearnedField& field, std::size_t i, const Vec3& x) {
  return field.query(i, x);
}

// ---------------------------------------------------------------------------
// Model file: "ASCNTMLP", u32 version, u32 feature_k, u32 layer count + 1,
// u64 sizes..., then f64 input_shift, input_scale, output_scale, and per layer
// weights (column-major) followed by biases. Little-endian throughout.

inline constexpr std::array<char, 8> kModelMagic{'A', 'S', 'C', 'N', 'T', 'M', 'L', 'P'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U u = std::bit_cast<U>(v);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.put(static_cast<char>((u >> (8 * b)) & 0xff));
}

template <class T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U u = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw InvalidInput("model file truncated");
    u |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * b);
  }
  return std::bit_cast<T>(u);
}

}  // namespace detail

inline void save_model(std::ostream& out, const PerceptronParams& p) {
  out.write(kModelMagic.data(), kModelMagic.size());
  detail::put_le<std::uint32_t>(out, kModelVersion);
  detail::put_le<std::uint32_t>(out, p.feature_k);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.sizes.size()));
  for (auto s : p.sizes) detail::put_le<std::uint64_t>(out, s);
  for (Eigen::Index k = 0; k < p.input_shift.size(); ++k) detail::put_le<double>(out, p.input_shift[k]);
  for (Eigen::Index k = 0; k < p.input_scale.size(); ++k) detail::put_le<double>(out, p.input_scale[k]);
  detail::put_le<double>(out, p.output_scale);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    for (Eigen::Index k = 0; k < p.weights[l].size(); ++k) detail::put_le<double>(out, p.weights[l].data()[k]);
    for (Eigen::Index k = 0; k < p.biases[l].size(); ++k) detail::put_le<double>(out, p.biases[l].data()[k]);
  }
}

inline PerceptronParams load_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kModelMagic) throw InvalidInput("not a model file (bad magic)");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kModelVersion)
    throw InvalidInput("unsupported model version " + std::to_string(version));
  const auto feature_k = detail::get_le<std::uint32_t>(in);
  const auto nsizes = detail::get_le<std::uint32_t>(in);
  if (nsizes < 2 || nsizes > 64) throw InvalidInput("model file: bad layer count");
  std::vector<std::size_t> sizes(nsizes);
  for (auto& s : sizes) {
    s = static_cast<std::size_t>(detail::get_le<std::uint64_t>(in));
    if (s == 0 || s > (1u << 20)) throw InvalidInput("model file: bad layer size");
  }
  if (sizes.front() != 3 + kFeatureDim || sizes.back() != 3)
    throw InvalidInput("model file: input/output dimensions do not match this build");
  PerceptronParams p = PerceptronParams::zeros(std::move(sizes));
  p.feature_k = feature_k;
  for (Eigen::Index k = 0; k < p.input_shift.size(); ++k) p.input_shift[k] = detail::get_le<double>(in);
  for (Eigen::Index k = 0; k < p.input_scale.size(); ++k) p.input_scale[k] = detail::get_le<double>(in);
  p.output_scale = detail::get_le<double>(in);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    for (Eigen::Index k = 0; k < p.weights[l].size(); ++k) p.weights[l].data()[k] = detail::get_le<double>(in);
    for (Eigen::Index k = 0; k < p.biases[l].size(); ++k) p.biases[l].data()[k] = detail::get_le<double>(in);
  }
  if (!p.all_finite()) throw InvalidInput("model file: non-finite parameters");
  return p;
}

inline void save_model(const std::filesystem::path& path, const PerceptronParams& p) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  save_model(out, p);
}

inline PerceptronParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  return load_model(in);
}

}  // namespace ascent
