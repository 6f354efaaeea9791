#ifndef MFKRIG_CONFIG_HPP
#define MFKRIG_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mfkrig/fit.hpp"
#include "mfkrig/geometry.hpp"

namespace mfk {

struct SourceSpec {
  std::string type;       // "isherwood" | "csv-replay" | "synthetic"
  std::string path;       // csv-replay: evaluation file
  std::string benchmark;  // synthetic: benchmark name
  std::string role;       // synthetic: "low" | "high"
  int dim = 1;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;

  std::string table = "data/isherwood_table.csv";
  std::string ranges = "data/isherwood_ranges.csv";
  std::string catalogue = "data/catalogue.csv";
  std::string output_dir = "out";

  std::vector<int> reduced_indices = {kIdxCLoa, kIdxM, kIdxAssAl, kIdxPhi};

  FitConfig fit;

  // reduce
  int bootstrap_samples = 200;
  int gradient_samples = 500;
  double capture_threshold = 0.95;
  double loading_cutoff = 0.1;

  // sobol
  int sobol_samples = 4096;

  // train
  int pool_size = 5000;
  double epsilon = 0.1;
  int train_max_iterations = 500;
  std::string manifest;
  std::vector<double> costs;
  std::vector<int> init_counts;
  std::vector<SourceSpec> sources;
  std::map<std::string, double> frozen;  // unscaled overrides for inert coordinates

  // report
  int surface_resolution = 33;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& context) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw config_error("unknown key '" + key + "' in " + context);
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return p;
  return (base / fp).string();
}

}  // namespace detail

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw config_error(path + ": " + e.what());
  }

  RunConfig cfg;
  const auto base = std::filesystem::path(path).parent_path();
  detail::require_keys(j, {"seed", "paths", "reduced_indices", "fit", "reduce", "sobol",
                           "train", "report"},
                       path);
  cfg.seed = j.value("seed", cfg.seed);

  if (j.contains("paths")) {
    const auto& p = j["paths"];
    detail::require_keys(p, {"table", "ranges", "catalogue", "output_dir"}, path + ":paths");
    cfg.table = p.value("table", cfg.table);
    cfg.ranges = p.value("ranges", cfg.ranges);
    cfg.catalogue = p.value("catalogue", cfg.catalogue);
    cfg.output_dir = p.value("output_dir", cfg.output_dir);
  }
  cfg.table = detail::resolve_path(cfg.table, base);
  cfg.ranges = detail::resolve_path(cfg.ranges, base);
  cfg.catalogue = detail::resolve_path(cfg.catalogue, base);
  cfg.output_dir = detail::resolve_path(cfg.output_dir, base);

  if (j.contains("reduced_indices")) {
    cfg.reduced_indices = j["reduced_indices"].get<std::vector<int>>();
    for (int k : cfg.reduced_indices)
      if (k < 0 || k >= kInputDim)
        throw config_error(path + ": reduced index " + std::to_string(k) + " out of range");
    if (cfg.reduced_indices.empty()) throw config_error(path + ": reduced_indices empty");
  }

  if (j.contains("fit")) {
    const auto& f = j["fit"];
    detail::require_keys(f,
                         {"restarts", "max_iterations", "gradient_tolerance", "length_lo",
                          "length_hi", "signal2_lo", "signal2_hi", "nugget2_lo", "nugget2_hi"},
                         path + ":fit");
    cfg.fit.restarts = f.value("restarts", cfg.fit.restarts);
    cfg.fit.max_iterations = f.value("max_iterations", cfg.fit.max_iterations);
    cfg.fit.gradient_tolerance = f.value("gradient_tolerance", cfg.fit.gradient_tolerance);
    cfg.fit.length_lo = f.value("length_lo", cfg.fit.length_lo);
    cfg.fit.length_hi = f.value("length_hi", cfg.fit.length_hi);
    cfg.fit.signal2_lo = f.value("signal2_lo", cfg.fit.signal2_lo);
    cfg.fit.signal2_hi = f.value("signal2_hi", cfg.fit.signal2_hi);
    cfg.fit.nugget2_lo = f.value("nugget2_lo", cfg.fit.nugget2_lo);
    cfg.fit.nugget2_hi = f.value("nugget2_hi", cfg.fit.nugget2_hi);
    if (cfg.fit.restarts < 1) throw config_error(path + ": fit.restarts must be >= 1");
  }
  cfg.fit.seed = cfg.seed;

  if (j.contains("reduce")) {
    const auto& r = j["reduce"];
    detail::require_keys(
        r, {"bootstrap_samples", "gradient_samples", "capture_threshold", "loading_cutoff"},
        path + ":reduce");
    cfg.bootstrap_samples = r.value("bootstrap_samples", cfg.bootstrap_samples);
    cfg.gradient_samples = r.value("gradient_samples", cfg.gradient_samples);
    cfg.capture_threshold = r.value("capture_threshold", cfg.capture_threshold);
    cfg.loading_cutoff = r.value("loading_cutoff", cfg.loading_cutoff);
  }

  if (j.contains("sobol")) {
    detail::require_keys(j["sobol"], {"samples"}, path + ":sobol");
    cfg.sobol_samples = j["sobol"].value("samples", cfg.sobol_samples);
  }

  if (j.contains("train")) {
    const auto& t = j["train"];
    detail::require_keys(t,
                         {"pool_size", "epsilon", "max_iterations", "manifest", "costs",
                          "init_counts", "sources", "frozen"},
                         path + ":train");
    cfg.pool_size = t.value("pool_size", cfg.pool_size);
    cfg.epsilon = t.value("epsilon", cfg.epsilon);
    cfg.train_max_iterations = t.value("max_iterations", cfg.train_max_iterations);
    if (t.contains("manifest"))
      cfg.manifest = detail::resolve_path(t["manifest"].get<std::string>(), base);
    if (t.contains("costs")) cfg.costs = t["costs"].get<std::vector<double>>();
    if (t.contains("init_counts")) cfg.init_counts = t["init_counts"].get<std::vector<int>>();
    if (t.contains("frozen"))
      cfg.frozen = t["frozen"].get<std::map<std::string, double>>();
    if (t.contains("sources")) {
      for (const auto& s : t["sources"]) {
        detail::require_keys(s, {"type", "path", "benchmark", "role", "dim", "seed"},
                             path + ":train.sources");
        SourceSpec spec;
        spec.type = s.value("type", "");
        spec.path = detail::resolve_path(s.value("path", ""), base);
        spec.benchmark = s.value("benchmark", "");
        spec.role = s.value("role", "");
        spec.dim = s.value("dim", 1);
        spec.seed = s.value("seed", std::uint64_t{0});
        if (spec.type != "isherwood" && spec.type != "csv-replay" && spec.type != "synthetic")
          throw config_error(path + ": unknown source type '" + spec.type + "'");
        if (spec.type == "csv-replay" && spec.path.empty())
          throw config_error(path + ": csv-replay source needs a path");
        if (spec.type == "synthetic" && (spec.benchmark.empty() || spec.role.empty()))
          throw config_error(path + ": synthetic source needs benchmark and role");
        cfg.sources.push_back(std::move(spec));
      }
    }
  }

  if (j.contains("report")) {
    detail::require_keys(j["report"], {"surface_resolution"}, path + ":report");
    cfg.surface_resolution = j["report"].value("surface_resolution", cfg.surface_resolution);
  }
  return cfg;
}

}  // namespace mfk

#endif
