#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ascent/bench.hpp"
#include "ascent/error.hpp"
#include "ascent/fields.hpp"
#include "ascent/io.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/learned.hpp"
#include "ascent/metrics.hpp"
#include "ascent/noise.hpp"
#include "ascent/shapes.hpp"
#include "ascent/solver.hpp"
#include "ascent/version.hpp"

namespace ascent::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// key=value lines on the error stream.
class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}

  template <class T>
  void kv(std::string_view key, const T& value) {
    std::ostringstream s;
    s.precision(17);
    s << value;
    err_ << "[ascent] " << key << '=' << s.str() << '\n';
  }
  void note(std::string_view msg) { err_ << "[ascent] " << msg << '\n'; }

 private:
  std::ostream& err_;
};

struct NoiseArgs {
  std::string in, out, kind = "gaussian";
  double level = 0.01;
  std::uint64_t seed = 0;
};

struct DenoiseArgs {
  std::string in, out, field = "mls", trace;
  std::size_t steps = 15, knn = 4, fit_knn = 0, threads = 1;
  double alpha = 0.9, beta = 0.2, gamma = 0.95;
  bool no_normalize = false;
};

struct MetricArgs {
  std::string denoised, clean, mesh, json;
  std::size_t threads = 1;
};

struct TrainArgs {
  std::string clean, noisy, out, loss_log;
  TrainConfig config;
};

struct BenchArgs {
  std::string plan, out;
  std::optional<std::uint64_t> seed;
};

struct SampleArgs {
  std::string shape = "sphere", out, mesh_out;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
};

inline std::unique_ptr<GradientField> make_cli_field(const std::string& spec, const PointCloud& cloud,
                                                     std::size_t fit_knn, Log& log) {
  if (spec.rfind("oracle:", 0) == 0) {
    auto loaded = io::read_off(spec.substr(7));
    if (loaded.dropped_faces > 0) log.kv("warning.dropped_degenerate_faces", loaded.dropped_faces);
    TriMesh mesh = cloud.transform ? transformed(loaded.mesh, *cloud.transform) : loaded.mesh;
    return std::make_unique<OracleField>(std::move(mesh), cloud.size());
  }
  if (spec == "mls") {
    const std::size_t k = resolve_fit_knn(fit_knn, cloud.size());
    log.kv("mls.fit_knn", k);
    return std::make_unique<MlsField>(build_mls_field(cloud, build_knn_graph(cloud, k)));
  }
  if (spec.rfind("learned:", 0) == 0)
    return std::make_unique<LearnedField>(build_learned_field(cloud, load_model(spec.substr(8))));
  throw InvalidInput("unknown field '" + spec + "' (expected oracle:<mesh.off>, mls, learned:<model>)");
}

inline void run_add_noise(const NoiseArgs& a, Log& log) {
  const auto clean = io::read_xyz(a.in);
  const NoiseSpec spec{parse_noise_kind(a.kind), a.level, a.seed};
  const auto noisy = add_noise(clean, spec);
  io::write_xyz(a.out, noisy);
  log.kv("points", noisy.size());
  log.kv("bounding_radius", bounding_radius(clean.points));
}

inline void run_denoise(const DenoiseArgs& a, Log& log) {
  PointCloud input = io::read_xyz(a.in);
  validate(input);
  if (!a.no_normalize) input = normalize(input).first;
  const AscentConfig config{a.steps, a.alpha, a.beta, a.gamma, a.threads};
  config.validate();
  const auto field = make_cli_field(a.field, input, a.fit_knn, log);
  const auto graph = build_knn_graph(input, a.knn);
  if (graph.truncated) log.kv("warning.knn_truncated_to", graph.k);
  const auto result = denoise(input, *field, graph, config, !a.trace.empty());
  io::write_xyz(a.out, result.cloud);
  if (!a.trace.empty()) {
    auto out = io::detail::open_out(a.trace);
    write_trace(out, *result.trajectory);
  }
  log.kv("points", result.cloud.size());
}

inline std::string metric_hash(const MetricArgs& a) {
  return fnv1a_hex(std::string(kChamferDefinition) + '|' + kP2mDefinition + '|' + a.denoised +
                   '|' + a.clean + '|' + a.mesh);
}

inline MetricReport run_metric(const MetricArgs& a, Log& log) {
  const auto denoised = io::read_xyz(a.denoised);
  const auto clean = io::read_xyz(a.clean);
  MetricReport r;
  r.cd = chamfer_distance(denoised, clean, a.threads);
  if (!a.mesh.empty()) {
    auto loaded = io::read_off(a.mesh);
    if (loaded.dropped_faces > 0) log.kv("warning.dropped_degenerate_faces", loaded.dropped_faces);
    r.p2m = point_to_mesh(denoised, SurfaceLocator(std::move(loaded.mesh)), a.threads);
  }
  r.n_points = denoised.size();
  r.denoised_path = a.denoised;
  r.clean_path = a.clean;
  r.mesh_path = a.mesh;
  r.config_hash = metric_hash(a);
  log.kv("cd_x1e4", r.cd * kDisplayScale);
  if (r.p2m) log.kv("p2m_x1e4", *r.p2m * kDisplayScale);
  if (!a.json.empty()) {
    auto out = io::detail::open_out(a.json);
    out << r.to_json().dump(2) << '\n';
  }
  return r;
}

inline void run_train(const TrainArgs& a, Log& log) {
  const auto noisy = io::read_xyz(a.noisy);
  CleanReference ref;
  if (std::filesystem::path(a.clean).extension() == ".off") {
    auto loaded = io::read_off(a.clean);
    if (loaded.dropped_faces > 0) log.kv("warning.dropped_degenerate_faces", loaded.dropped_faces);
    ref = std::move(loaded.mesh);
  } else {
    ref = io::read_xyz(a.clean);
  }
  const auto result = train_field(ref, noisy, a.config);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    log.kv("epoch." + std::to_string(e + 1) + ".loss", result.epoch_loss[e]);
  save_model(a.out, result.params);
  if (!a.loss_log.empty()) {
    auto out = io::detail::open_out(a.loss_log);
    out.precision(17);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      out << e + 1 << ',' << result.epoch_loss[e] << '\n';
  }
}

inline void run_bench(const BenchArgs& a, Log& log) {
  auto plan = bench::load_plan(a.plan);
  if (a.seed) plan.seeds = {*a.seed};
  log.kv("plan_hash", plan.hash());
  const auto rows = bench::run_benchmark(plan);
  bench::write_results(a.out, plan, rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  log.kv("cells", rows.size());
  log.kv("failed_cells", failed);
}

inline void run_sample(const SampleArgs& a, Log& log) {
  const TriMesh mesh = bench::load_shape(a.shape);
  io::write_xyz(a.out, shapes::sample_surface(mesh, a.n, a.seed));
  if (!a.mesh_out.empty()) io::write_off(a.mesh_out, mesh);
  log.kv("points", a.n);
}

/// Parses argv, runs one subcommand and maps errors to exit codes:
/// 0 success, 2 usage or input errors, 1 numerical failures. Errors are
/// reported as a single "error: <kind>: <message>" line on `err`.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Point cloud denoising by momentum ascent in gradient fields", "ascent"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  Log log(err);

  NoiseArgs noise;
  auto* c_noise = app.add_subcommand("add-noise", "Perturb a clean cloud with Gaussian/Laplace/uniform noise");
  c_noise->add_option("--in", noise.in, "Clean XYZ cloud")->required();
  c_noise->add_option("--out", noise.out, "Noisy XYZ output")->required();
  c_noise->add_option("--kind", noise.kind, "gaussian | laplace | uniform")
      ->check(CLI::IsMember({"gaussian", "laplace", "uniform"}))->capture_default_str();
  c_noise->add_option("--level", noise.level, "Per-axis scale as a fraction of the bounding radius")
      ->check(CLI::PositiveNumber)->capture_default_str();
  c_noise->add_option("--seed", noise.seed, "RNG seed")->capture_default_str();

  DenoiseArgs den;
  auto* c_den = app.add_subcommand("denoise", "Momentum gradient ascent towards the estimated surface");
  c_den->add_option("--in", den.in, "Noisy XYZ cloud")->required();
  c_den->add_option("--out", den.out, "Denoised XYZ output")->required();
  c_den->add_option("--field", den.field, "oracle:<mesh.off> | mls | learned:<model>")->capture_default_str();
  c_den->add_option("--steps", den.steps, "Number of ascent steps T")->check(CLI::PositiveNumber)->capture_default_str();
  c_den->add_option("--alpha", den.alpha, "Momentum weight in (0, 1]; 1 = classical ascent")->capture_default_str();
  c_den->add_option("--beta", den.beta, "Step size")->capture_default_str();
  c_den->add_option("--gamma", den.gamma, "Per-step decay factor in (0, 1]")->capture_default_str();
  c_den->add_option("--knn", den.knn, "Ensemble neighbourhood size k")->check(CLI::PositiveNumber)->capture_default_str();
  c_den->add_option("--fit-knn", den.fit_knn, "Neighbourhood of the mls plane fits (0 = N/125 within [8, 64])")->capture_default_str();
  c_den->add_option("--threads", den.threads, "Worker threads (0 = all cores)")->capture_default_str();
  c_den->add_option("--trace", den.trace, "Write per-step JSON lines here");
  c_den->add_flag("--no-normalize", den.no_normalize, "Denoise in model units");

  MetricArgs met;
  auto* c_met = app.add_subcommand("metric", "Chamfer and point-to-mesh distances");
  c_met->add_option("--denoised", met.denoised, "Denoised XYZ cloud")->required();
  c_met->add_option("--clean", met.clean, "Clean reference XYZ cloud")->required();
  c_met->add_option("--mesh", met.mesh, "Reference OFF mesh for P2M");
  c_met->add_option("--json", met.json, "Report output path");
  c_met->add_option("--threads", met.threads, "Worker threads (0 = all cores)")->capture_default_str();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train-field", "Fit the perceptron gradient field on noisy/clean pairs");
  c_tr->add_option("--clean", tr.clean, "Clean reference: OFF mesh or XYZ cloud")->required();
  c_tr->add_option("--noisy", tr.noisy, "Noisy XYZ cloud")->required();
  c_tr->add_option("--out", tr.out, "Model file output")->required();
  c_tr->add_option("--sigma", tr.config.sample_sigma, "Sampling std around anchors, fraction of radius")->capture_default_str();
  c_tr->add_option("--samples", tr.config.samples_per_anchor, "Samples per anchor")->capture_default_str();
  c_tr->add_option("--lr", tr.config.learning_rate, "SGD learning rate")->capture_default_str();
  c_tr->add_option("--epochs", tr.config.epochs, "Training epochs")->capture_default_str();
  c_tr->add_option("--batch", tr.config.batch_size, "Minibatch size")->capture_default_str();
  c_tr->add_option("--seed", tr.config.seed, "RNG seed")->capture_default_str();
  c_tr->add_option("--feature-knn", tr.config.feature_k, "Neighbourhood size for features")->capture_default_str();
  c_tr->add_option("--hidden", tr.config.hidden, "Hidden layer widths")->capture_default_str();
  c_tr->add_option("--loss-log", tr.loss_log, "CSV of per-epoch loss");

  BenchArgs be;
  auto* c_be = app.add_subcommand("benchmark", "Run a declarative benchmark plan");
  c_be->add_option("--plan", be.plan, "Plan file (TOML)")->required();
  c_be->add_option("--out", be.out, "Output directory for results.csv/results.json")->required();
  c_be->add_option("--seed", be.seed, "Override the plan's seed list with one seed");

  SampleArgs sa;
  auto* c_sa = app.add_subcommand("sample-shape", "Area-uniform samples of a built-in shape or OFF mesh");
  c_sa->add_option("--shape", sa.shape, "sphere | cube | torus | plane | <mesh.off>")->capture_default_str();
  c_sa->add_option("--n", sa.n, "Number of points")->check(CLI::PositiveNumber)->capture_default_str();
  c_sa->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();
  c_sa->add_option("--out", sa.out, "XYZ output")->required();
  c_sa->add_option("--mesh-out", sa.mesh_out, "Also write the shape's mesh as OFF");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << '\n';
    return kExitUsage;
  }

  try {
    // Effective values of the chosen subcommand only.
    const auto* sub = app.get_subcommands().front();
    std::istringstream effective(sub->config_to_str(true, false));
    for (std::string line; std::getline(effective, line);)
      if (!line.empty() && line.front() != '#') log.note("config " + sub->get_name() + "." + line);
    if (*c_noise) run_add_noise(noise, log);
    else if (*c_den) run_denoise(den, log);
    else if (*c_met) run_metric(met, log);
    else if (*c_tr) run_train(tr, log);
    else if (*c_be) run_bench(be, log);
    else if (*c_sa) run_sample(sa, log);
  } catch (const InvalidInput& e) {
    err << "error: invalid_input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "error: numerical: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: runtime: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ascent::cli
