#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ascent/error.hpp"
#include "ascent/fields.hpp"
#include "ascent/io.hpp"
#include "ascent/kdtree.hpp"
#include "ascent/learned.hpp"
#include "ascent/metrics.hpp"
#include "ascent/noise.hpp"
#include "ascent/random.hpp"
#include "ascent/shapes.hpp"
#include "ascent/solver.hpp"

namespace ascent::bench {

/// Declarative grid of benchmark cells. Every list is a grid axis.
struct BenchPlan {
  std::vector<std::string> shapes{"sphere"};  ///< built-in id or path to an OFF mesh
  std::size_t points = 10000;
  std::vector<NoiseKind> noise_kinds{NoiseKind::gaussian};
  std::vector<double> noise_levels{0.02};
  std::vector<std::string> fields{"mls"};  ///< oracle | mls | learned:<model file>
  std::vector<std::string> methods{"momentum", "classical"};
  std::vector<std::size_t> steps{15};
  std::vector<double> alphas{0.9};
  std::vector<double> betas{0.2};
  std::vector<double> gammas{0.95};
  std::vector<std::size_t> knn{4};
  std::size_t fit_knn = 0;  ///< mls plane-fit neighbourhood; 0 = auto_fit_knn(points)
  std::vector<std::uint64_t> seeds{1};
  std::size_t repetitions = 1;
  std::size_t threads = 1;

  void validate() const {
    detail::require(!shapes.empty() && !noise_kinds.empty() && !noise_levels.empty() &&
                        !fields.empty() && !methods.empty() && !steps.empty() && !alphas.empty() &&
                        !betas.empty() && !gammas.empty() && !knn.empty() && !seeds.empty(),
                    "plan: every grid axis needs at least one value");
    detail::require(points >= 2 && repetitions >= 1 && (fit_knn == 0 || fit_knn >= 3), "plan: bad sizes");
    for (const auto& m : methods)
      detail::require(m == "momentum" || m == "classical", "plan: unknown method '" + m + "'");
    for (double l : noise_levels) detail::require(l >= 0.0, "plan: noise level must be >= 0");
  }

  /// Canonical text form; its hash is stamped into every output.
  std::string canonical() const {
    std::ostringstream s;
    s.precision(17);
    auto list = [&](const char* key, const auto& v) {
      s << key << '=';
      for (const auto& x : v) s << x << ',';
      s << ';';
    };
    list("shapes", shapes);
    s << "points=" << points << ';';
    std::vector<std::string> kinds;
    for (auto k : noise_kinds) kinds.emplace_back(to_string(k));
    list("noise_kinds", kinds);
    list("noise_levels", noise_levels);
    list("fields", fields);
    list("methods", methods);
    list("steps", steps);
    list("alphas", alphas);
    list("betas", betas);
    list("gammas", gammas);
    list("knn", knn);
    s << "fit_knn=" << fit_knn << ';';
    list("seeds", seeds);
    s << "repetitions=" << repetitions << ';';
    return s.str();
  }

  std::string hash() const { return fnv1a_hex(canonical()); }
};

namespace detail {

template <class T>
T parse_scalar(const std::string& key, const std::string& s) {
  T v{};
  if (!io::detail::parse_number(s, v))
    throw InvalidInput("plan: bad value '" + s + "' for " + key);
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::vector<std::string>& in) {
  std::vector<T> out;
  for (const auto& s : in) out.push_back(parse_scalar<T>(key, s));
  return out;
}

}  // namespace detail

/// Reads a TOML plan (top-level `key = value` or `key = [a, b]`).
/// Unknown keys are rejected.
inline BenchPlan parse_plan(std::istream& in) {
  BenchPlan p;
  CLI::ConfigTOML reader;
  std::vector<CLI::ConfigItem> items;
  try {
    items = reader.from_config(in);
  } catch (const CLI::Error& e) {
    throw InvalidInput(std::string("plan: ") + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string key = item.fullname();
    const auto& v = item.inputs;
    auto one = [&]() -> const std::string& {
      if (v.size() != 1) throw InvalidInput("plan: " + key + " takes a single value");
      return v.front();
    };
    if (key == "shapes") p.shapes = v;
    else if (key == "points") p.points = detail::parse_scalar<std::size_t>(key, one());
    else if (key == "noise_kinds") {
      p.noise_kinds.clear();
      for (const auto& s : v) p.noise_kinds.push_back(parse_noise_kind(s));
    } else if (key == "noise_levels") p.noise_levels = detail::parse_list<double>(key, v);
    else if (key == "fields") p.fields = v;
    else if (key == "methods") p.methods = v;
    else if (key == "steps") p.steps = detail::parse_list<std::size_t>(key, v);
    else if (key == "alphas") p.alphas = detail::parse_list<double>(key, v);
    else if (key == "betas") p.betas = detail::parse_list<double>(key, v);
    else if (key == "gammas") p.gammas = detail::parse_list<double>(key, v);
    else if (key == "knn") p.knn = detail::parse_list<std::size_t>(key, v);
    else if (key == "fit_knn") p.fit_knn = detail::parse_scalar<std::size_t>(key, one());
    else if (key == "seeds") p.seeds = detail::parse_list<std::uint64_t>(key, v);
    else if (key == "repetitions") p.repetitions = detail::parse_scalar<std::size_t>(key, one());
    else if (key == "threads") p.threads = detail::parse_scalar<std::size_t>(key, one());
    else throw InvalidInput("plan: unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

inline BenchPlan load_plan(const std::filesystem::path& path) {
  auto in = io::detail::open_in(path);
  return parse_plan(in);
}

struct BenchCell {
  std::size_t index = 0;
  std::string shape;
  NoiseKind kind = NoiseKind::gaussian;
  double level = 0.0;
  std::string field;
  std::string method;
  AscentConfig ascent;
  std::size_t knn = 4;
  std::uint64_t seed = 0;
  std::size_t repetition = 0;
};

/// Cells in a fixed nesting order. Classical cells ignore the alpha axis.
inline std::vector<BenchCell> expand(const BenchPlan& plan) {
  plan.validate();
  std::vector<BenchCell> cells;
  for (const auto& shape : plan.shapes)
    for (auto kind : plan.noise_kinds)
      for (double level : plan.noise_levels)
        for (auto seed : plan.seeds)
          for (std::size_t rep = 0; rep < plan.repetitions; ++rep)
            for (const auto& field : plan.fields)
              for (auto k : plan.knn)
                for (const auto& method : plan.methods)
                  for (auto T : plan.steps)
                    for (std::size_t ai = 0; ai < (method == "classical" ? 1 : plan.alphas.size()); ++ai)
                      for (double beta : plan.betas)
                        for (double gamma : plan.gammas) {
                          BenchCell c;
                          c.index = cells.size();
                          c.shape = shape;
                          c.kind = kind;
                          c.level = level;
                          c.field = field;
                          c.method = method;
                          c.ascent.steps = T;
                          c.ascent.alpha = method == "classical" ? 1.0 : plan.alphas[ai];
                          c.ascent.beta = beta;
                          c.ascent.gamma = gamma;
                          c.ascent.threads = plan.threads;
                          c.knn = k;
                          c.seed = seed;
                          c.repetition = rep;
                          cells.push_back(c);
                        }
  return cells;
}

struct BenchRow {
  BenchCell cell;
  bool ok = false;
  std::string error;
  std::size_t n_points = 0;
  double cd_before = 0, cd_after = 0;
  double p2m_before = 0, p2m_after = 0;
  double outliers_before = 0, outliers_after = 0;  ///< fraction with residual > 3x noise scale
  double seconds = 0;  ///< wall-clock of the ascent only
};

inline TriMesh load_shape(const std::string& shape) {
  if (shape.find('.') != std::string::npos || shape.find('/') != std::string::npos)
    return io::read_off(shape).mesh;
  return shapes::by_name(shape);
}

/// Inputs shared by every cell with the same shape, noise and seed; the data
/// stream is derived from those coordinates so compared methods see the
/// same noisy cloud.
struct BenchData {
  std::shared_ptr<const SurfaceLocator> surface;
  PointCloud clean;
  PointCloud noisy;
  double noise_scale = 0.0;
};

inline BenchData make_data(const BenchPlan& plan, const BenchCell& c) {
  BenchData d;
  d.surface = std::make_shared<const SurfaceLocator>(load_shape(c.shape));
  const std::uint64_t key = derive_seed(
      derive_seed(derive_seed(c.seed, fnv1a(c.shape)),
                  static_cast<std::uint64_t>(c.kind) * 1000003u +
                      static_cast<std::uint64_t>(c.level * 1e9)),
      c.repetition);
  d.clean = shapes::sample_surface(d.surface->mesh(), plan.points, derive_seed(key, 1));
  const double radius = bounding_radius(d.clean.points);
  d.noise_scale = c.level * radius;
  d.noisy = c.level > 0.0 ? add_noise(d.clean, {c.kind, c.level, derive_seed(key, 2)}) : d.clean;
  return d;
}

inline std::unique_ptr<GradientField> make_field(const std::string& spec, const BenchData& data,
                                                 std::size_t fit_knn) {
  if (spec == "oracle") return std::make_unique<OracleField>(data.surface, data.noisy.size());
  if (spec == "mls")
    return std::make_unique<MlsField>(build_mls_field(data.noisy, build_knn_graph(data.noisy, resolve_fit_knn(fit_knn, data.noisy.size()))));
  if (spec.rfind("learned:", 0) == 0)
    return std::make_unique<LearnedField>(build_learned_field(data.noisy, load_model(spec.substr(8))));
  throw InvalidInput("unknown field provider '" + spec + "'");
}

inline double outlier_fraction(const PointCloud& cloud, const SurfaceLocator& surface,
                               double noise_scale) {
  if (noise_scale <= 0.0) return 0.0;
  std::size_t count = 0;
  for (const auto& p : cloud.points)
    if (surface.nearest(p).distance > 3.0 * noise_scale) ++count;
  return static_cast<double>(count) / static_cast<double>(cloud.size());
}

/// Runs every cell of the plan. A failing cell yields a row with ok = false;
/// the run continues.
inline std::vector<BenchRow> run_benchmark(const BenchPlan& plan) {
  const auto cells = expand(plan);
  std::vector<BenchRow> rows;
  rows.reserve(cells.size());

  std::string data_key, field_key;
  std::optional<BenchData> data;
  std::unique_ptr<GradientField> field;
  std::optional<NeighborGraph> graph;
  double cd_before = 0, p2m_before = 0, out_before = 0;

  for (const auto& c : cells) {
    BenchRow row;
    row.cell = c;
    try {
      std::ostringstream dk;
      dk << c.shape << '|' << to_string(c.kind) << '|' << c.level << '|' << c.seed << '|' << c.repetition;
      if (dk.str() != data_key) {
        data_key = dk.str();
        field_key.clear();
        data.reset();
        data = make_data(plan, c);
        cd_before = chamfer_distance(data->noisy, data->clean, plan.threads);
        p2m_before = point_to_mesh(data->noisy, *data->surface, plan.threads);
        out_before = outlier_fraction(data->noisy, *data->surface, data->noise_scale);
      }
      const std::string fk = c.field + '|' + std::to_string(c.knn);
      if (fk != field_key) {
        field.reset();
        graph.reset();
        field_key.clear();
        field = make_field(c.field, *data, plan.fit_knn);
        graph = build_knn_graph(data->noisy, c.knn);
        field_key = fk;
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = denoise(data->noisy, *field, *graph, c.ascent);
      const auto t1 = std::chrono::steady_clock::now();
      row.seconds = std::chrono::duration<double>(t1 - t0).count();
      row.n_points = result.cloud.size();
      row.cd_before = cd_before;
      row.p2m_before = p2m_before;
      row.outliers_before = out_before;
      row.cd_after = chamfer_distance(result.cloud, data->clean, plan.threads);
      row.p2m_after = point_to_mesh(result.cloud, *data->surface, plan.threads);
      row.outliers_after = outlier_fraction(result.cloud, *data->surface, data->noise_scale);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const char* kCsvHeader =
    "index,shape,noise,level,field,method,steps,alpha,beta,gamma,knn,seed,repetition,status,"
    "n_points,cd_before,cd_after,p2m_before,p2m_after,cd_after_x1e4,p2m_after_x1e4,"
    "outliers_before,outliers_after,seconds,error";

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out.precision(17);
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    const auto& c = r.cell;
    out << c.index << ',' << csv_escape(c.shape) << ',' << to_string(c.kind) << ',' << c.level << ','
        << csv_escape(c.field) << ',' << c.method << ',' << c.ascent.steps << ',' << c.ascent.alpha
        << ',' << c.ascent.beta << ',' << c.ascent.gamma << ',' << c.knn << ',' << c.seed << ','
        << c.repetition << ',' << (r.ok ? "ok" : "failed") << ',' << r.n_points << ','
        << r.cd_before << ',' << r.cd_after << ',' << r.p2m_before << ',' << r.p2m_after << ','
        << r.cd_after * kDisplayScale << ',' << r.p2m_after * kDisplayScale << ','
        << r.outliers_before << ',' << r.outliers_after << ',' << r.seconds << ','
        << csv_escape(r.error) << '\n';
  }
}

inline nlohmann::ordered_json to_json(const BenchPlan& plan, const std::vector<BenchRow>& rows) {
  nlohmann::ordered_json j;
  j["plan_hash"] = plan.hash();
  j["plan"] = plan.canonical();
  j["cd_definition"] = kChamferDefinition;
  j["p2m_definition"] = kP2mDefinition;
  j["display_scale"] = kDisplayScale;
  auto& arr = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    const auto& c = r.cell;
    arr.push_back({{"index", c.index},
                   {"shape", c.shape},
                   {"noise", to_string(c.kind)},
                   {"level", c.level},
                   {"field", c.field},
                   {"method", c.method},
                   {"steps", c.ascent.steps},
                   {"alpha", c.ascent.alpha},
                   {"beta", c.ascent.beta},
                   {"gamma", c.ascent.gamma},
                   {"knn", c.knn},
                   {"seed", c.seed},
                   {"repetition", c.repetition},
                   {"status", r.ok ? "ok" : "failed"},
                   {"error", r.error},
                   {"n_points", r.n_points},
                   {"cd_before", r.cd_before},
                   {"cd_after", r.cd_after},
                   {"p2m_before", r.p2m_before},
                   {"p2m_after", r.p2m_after},
                   {"cd_after_x1e4", r.cd_after * kDisplayScale},
                   {"p2m_after_x1e4", r.p2m_after * kDisplayScale},
                   {"outliers_before", r.outliers_before},
                   {"outliers_after", r.outliers_after},
                   {"seconds", r.seconds}});
  }
  return j;
}

inline void write_results(const std::filesystem::path& dir, const BenchPlan& plan,
                          const std::vector<BenchRow>& rows) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "results.csv");
    if (!csv) throw InvalidInput("cannot write '" + (dir / "results.csv").string() + "'");
    write_csv(csv, rows);
  }
  std::ofstream js(dir / "results.json");
  if (!js) throw InvalidInput("cannot write '" + (dir / "results.json").string() + "'");
  js << to_json(plan, rows).dump(2) << '\n';
}

}  // namespace ascent::bench
