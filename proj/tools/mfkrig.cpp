// Command line front end for the multi-fidelity wind-load surrogate library.
//
// Subcommands:
//   isherwood    evaluate the empirical correlation for one geometry and angle
//   reduce       rank input directions and pick the reduced coordinate set
//   train        run the cost-aware sequential training loop
//   predict      evaluate a trained bundle on a CSV of reduced inputs
//   report       sensitivity indices and response surfaces for a bundle
//   sensitivity  sobol / subspace analyses of a trained bundle
//
// Exit codes: 0 ok, 2 usage or configuration, 3 data, 4 numerical failure,
// 1 anything else.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mfkrig/benchmarks.hpp"
#include "mfkrig/config.hpp"
#include "mfkrig/io.hpp"
#include "mfkrig/pipeline.hpp"

namespace {

void vlog(const std::string& msg) {
  if (std::getenv("MFKRIG_VERBOSE")) std::cerr << "[mfkrig] " << msg << "\n";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// ---------------------------------------------------------------- isherwood

struct IsherwoodOpts {
  std::string geometry;
  double phi = 0.0;
  std::string table = "data/isherwood_table.csv";
  std::string ranges = "data/isherwood_ranges.csv";
};

void run_isherwood(const IsherwoodOpts& o) {
  const mfk::CoefficientTable table = mfk::load_coefficient_table(o.table, o.ranges);
  const mfk::ShipGeometry g = mfk::load_geometry(o.geometry);
  const mfk::Vector x = mfk::input_vector(g, o.phi);
  for (const auto& name : mfk::out_of_range_components(x, table))
    std::cerr << "warning: " << name << " lies outside the table's validity range\n";
  const mfk::LoadCoefficients c = mfk::isherwood_from_input(x, table);
  std::cout << "c_x " << fmt(c.c_x) << "\n"
            << "c_y " << fmt(c.c_y) << "\n"
            << "c_m " << fmt(c.c_m) << "\n";
}

// ------------------------------------------------------------------- reduce

struct ConfigOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
};

mfk::RunConfig load_with_overrides(const ConfigOpts& o) {
  mfk::RunConfig cfg = mfk::load_run_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.fit.seed = *o.seed;
  }
  if (o.output) cfg.output_dir = *o.output;
  return cfg;
}

void run_reduce(const ConfigOpts& o) {
  const mfk::RunConfig cfg = load_with_overrides(o);
  const mfk::CoefficientTable table = mfk::load_coefficient_table(cfg.table, cfg.ranges);
  mfk::ReduceOptions opt;
  opt.bootstrap_samples = cfg.bootstrap_samples;
  opt.gradient_samples = cfg.gradient_samples;
  opt.capture_threshold = cfg.capture_threshold;
  opt.loading_cutoff = cfg.loading_cutoff;
  opt.seed = cfg.seed;
  opt.fit = cfg.fit;
  vlog("reduce: " + std::to_string(opt.bootstrap_samples) + " bootstrap samples");
  const mfk::ReduceResult res = mfk::run_reduce(table, opt);

  nlohmann::ordered_json j;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto& rep : res.per_output) {
    nlohmann::ordered_json jo;
    jo["name"] = rep.name;
    jo["eigenvalues"] = std::vector<double>(rep.eigenvalues.begin(), rep.eigenvalues.end());
    jo["loadings"] = std::vector<double>(rep.loadings.begin(), rep.loadings.end());
    jo["subspace_dim"] = rep.subspace_dim;
    std::vector<std::string> sel;
    for (int k : rep.selected) sel.push_back(mfk::input_names()[static_cast<std::size_t>(k)]);
    jo["selected"] = sel;
    std::vector<std::vector<double>> vecs;
    for (int r = 0; r < rep.eigenvectors.rows(); ++r)
      vecs.emplace_back(rep.eigenvectors.row(r).begin(), rep.eigenvectors.row(r).end());
    jo["eigenvectors"] = vecs;
    outs.push_back(std::move(jo));
  }
  j["outputs"] = std::move(outs);
  j["selected_indices"] = res.selected_indices;
  std::vector<std::string> names;
  for (int k : res.selected_indices)
    names.push_back(mfk::input_names()[static_cast<std::size_t>(k)]);
  j["selected_names"] = names;

  const std::string out = cfg.output_dir + "/reduce_report.json";
  mfk::detail::atomic_write(out, j.dump(2) + "\n");

  for (const auto& rep : res.per_output) {
    std::vector<std::string> sel;
    for (int k : rep.selected) sel.push_back(mfk::input_names()[static_cast<std::size_t>(k)]);
    std::cout << rep.name << " subspace " << rep.subspace_dim << " selected " << join(sel)
              << "\n";
  }
  std::cout << "reduced inputs " << join(names) << "\n";
  std::cout << "wrote " << out << "\n";
}

// -------------------------------------------------------------------- train

struct LevelSetup {
  std::vector<mfk::LevelEvaluator> sources;
  std::vector<std::string> output_names;
  std::vector<std::string> input_names;
  std::vector<std::pair<double, double>> ranges;
  std::vector<int> reduced_indices;
  int dim = 0;
  mfk::CandidatePool pool;
};

mfk::Vector frozen_base(const mfk::RunConfig& cfg, const mfk::CoefficientTable& table) {
  mfk::Vector base = mfk::Vector::Constant(mfk::kInputDim, 0.5);
  for (const auto& [name, value] : cfg.frozen) {
    int idx = -1;
    for (int k = 0; k < mfk::kInputDim; ++k)
      if (mfk::input_names()[static_cast<std::size_t>(k)] == name) idx = k;
    if (idx < 0) throw mfk::config_error("frozen: unknown parameter '" + name + "'");
    for (int k : cfg.reduced_indices)
      if (k == idx)
        throw mfk::config_error("frozen: parameter '" + name + "' is an active coordinate");
    const auto [lo, hi] = table.ranges[static_cast<std::size_t>(idx)];
    const double z = (value - lo) / (hi - lo);
    if (z < 0.0 || z > 1.0)
      throw mfk::config_error("frozen: parameter '" + name + "' outside its range");
    base[idx] = z;
  }
  return base;
}

LevelSetup build_levels(const mfk::RunConfig& cfg) {
  if (cfg.sources.empty()) throw mfk::config_error("train: no sources configured");

  bool any_isherwood = false;
  int first_replay = -1;
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    if (cfg.sources[i].type == "isherwood") any_isherwood = true;
    if (cfg.sources[i].type == "csv-replay" && first_replay < 0)
      first_replay = static_cast<int>(i);
  }

  LevelSetup setup;
  std::optional<mfk::CoefficientTable> table;
  std::vector<mfk::Dataset> replays(cfg.sources.size());

  if (any_isherwood) {
    table = mfk::load_coefficient_table(cfg.table, cfg.ranges);
    if (cfg.reduced_indices.empty() || cfg.reduced_indices.back() != mfk::kIdxPhi)
      throw mfk::config_error("train: reduced coordinates must end with the angle");
    setup.reduced_indices = cfg.reduced_indices;
    setup.dim = static_cast<int>(cfg.reduced_indices.size());
    const auto full = mfk::scaler_from_table(*table);
    for (int k : cfg.reduced_indices) {
      setup.input_names.push_back(mfk::input_names()[static_cast<std::size_t>(k)]);
      setup.ranges.push_back(full.ranges()[static_cast<std::size_t>(k)]);
    }
  }

  // Evaluators plus schema agreement across levels.
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const auto& spec = cfg.sources[i];
    std::vector<std::string> outs;
    int dim = 0;
    if (spec.type == "isherwood") {
      setup.sources.push_back(
          mfk::isherwood_source(*table, cfg.reduced_indices, frozen_base(cfg, *table)));
      outs = mfk::coefficient_names();
      dim = static_cast<int>(cfg.reduced_indices.size());
    } else if (spec.type == "csv-replay") {
      replays[i] = mfk::load_dataset(spec.path);
      outs = replays[i].output_names;
      dim = static_cast<int>(replays[i].X.cols());
      if (setup.input_names.empty()) {
        setup.input_names = replays[i].input_names;
        for (int k = 0; k < dim; ++k) setup.ranges.emplace_back(0.0, 1.0);
      }
      setup.sources.push_back(mfk::replay_source(replays[i]));
    } else {  // synthetic
      const mfk::SyntheticBenchmark bm = mfk::make_benchmark(spec.benchmark, spec.seed, spec.dim);
      if (spec.role != "low" && spec.role != "high")
        throw mfk::config_error("train: synthetic role must be low or high");
      const auto f = spec.role == "low" ? bm.low : bm.high;
      setup.sources.push_back([f](const mfk::Vector& z) {
        mfk::Vector out(1);
        out[0] = f(z);
        return out;
      });
      outs = {"y"};
      dim = spec.dim;
      if (setup.input_names.empty()) {
        for (int k = 0; k < dim; ++k) {
          setup.input_names.push_back("x" + std::to_string(k + 1));
          setup.ranges.emplace_back(0.0, 1.0);
        }
      }
    }
    if (setup.output_names.empty())
      setup.output_names = outs;
    else if (setup.output_names != outs)
      throw mfk::config_error("train: level " + std::to_string(i + 1) +
                              " disagrees on output columns");
    if (setup.dim == 0) setup.dim = dim;
    if (dim != setup.dim)
      throw mfk::config_error("train: level " + std::to_string(i + 1) +
                              " disagrees on input dimension");
  }

  // Candidate pool.
  if (any_isherwood) {
    const mfk::ConfigurationCatalogue cat = mfk::load_catalogue(cfg.catalogue);
    std::vector<std::string> expect(setup.input_names.begin(), setup.input_names.end() - 1);
    if (cat.param_names != expect)
      throw mfk::config_error("train: catalogue columns must match the reduced coordinates");
    const auto full = mfk::scaler_from_table(*table);
    setup.pool = mfk::generate_pool(cat, full.subset(cfg.reduced_indices), cfg.pool_size,
                                    cfg.seed + 13);
  } else if (first_replay >= 0) {
    const auto& d = replays[static_cast<std::size_t>(first_replay)];
    setup.pool.Z = d.X;
    setup.pool.config_index.assign(static_cast<std::size_t>(d.X.rows()), -1);
    setup.pool.feasible.assign(static_cast<std::size_t>(d.X.rows()), true);
    setup.pool.used.assign(static_cast<std::size_t>(d.X.rows()), false);
  } else {
    setup.pool.Z = mfk::uniform_box(cfg.pool_size, setup.dim, cfg.seed + 13);
    setup.pool.config_index.assign(static_cast<std::size_t>(cfg.pool_size), -1);
    setup.pool.feasible.assign(static_cast<std::size_t>(cfg.pool_size), true);
    setup.pool.used.assign(static_cast<std::size_t>(cfg.pool_size), false);
  }
  return setup;
}

void run_train(const ConfigOpts& o) {
  const mfk::RunConfig cfg = load_with_overrides(o);
  LevelSetup setup = build_levels(cfg);
  const int n_levels = static_cast<int>(setup.sources.size());

  std::vector<mfk::Matrix> X(static_cast<std::size_t>(n_levels));
  std::vector<mfk::Matrix> Y(static_cast<std::size_t>(n_levels));
  std::vector<double> costs = cfg.costs;

  if (!cfg.manifest.empty()) {
    const mfk::Manifest man = mfk::load_manifest(cfg.manifest);
    if (static_cast<int>(man.levels.size()) != n_levels)
      throw mfk::config_error("train: manifest level count does not match sources");
    const auto data = mfk::load_manifest_datasets(man, cfg.manifest);
    for (int t = 0; t < n_levels; ++t) {
      if (data[static_cast<std::size_t>(t)].X.cols() != setup.dim)
        throw mfk::data_error("train: manifest level " + std::to_string(t + 1) +
                              " has the wrong input dimension");
      if (data[static_cast<std::size_t>(t)].output_names != setup.output_names)
        throw mfk::data_error("train: manifest level " + std::to_string(t + 1) +
                              " has the wrong target columns");
      X[static_cast<std::size_t>(t)] = data[static_cast<std::size_t>(t)].X;
      Y[static_cast<std::size_t>(t)] = data[static_cast<std::size_t>(t)].Y;
    }
    if (costs.empty())
      for (const auto& e : man.levels) costs.push_back(e.cost);
  } else if (!cfg.init_counts.empty()) {
    if (static_cast<int>(cfg.init_counts.size()) != n_levels)
      throw mfk::config_error("train: init_counts must list one count per level");
    for (std::size_t t = 0; t + 1 < cfg.init_counts.size(); ++t)
      if (cfg.init_counts[t] < cfg.init_counts[t + 1])
        throw mfk::config_error("train: init_counts must not increase with fidelity");
    if (cfg.init_counts.back() < 2)
      throw mfk::config_error("train: every level needs at least 2 initial points");
    std::vector<int> rows;
    for (int i = 0; i < setup.pool.size() &&
                    static_cast<int>(rows.size()) < cfg.init_counts.front();
         ++i)
      if (setup.pool.feasible[static_cast<std::size_t>(i)]) rows.push_back(i);
    if (static_cast<int>(rows.size()) < cfg.init_counts.front())
      throw mfk::data_error("train: candidate pool has too few feasible points");
    for (int t = 0; t < n_levels; ++t) {
      const int n = cfg.init_counts[static_cast<std::size_t>(t)];
      mfk::Matrix Xt(n, setup.dim);
      mfk::Matrix Yt(n, static_cast<Eigen::Index>(setup.output_names.size()));
      for (int r = 0; r < n; ++r) {
        const mfk::Vector z = setup.pool.Z.row(rows[static_cast<std::size_t>(r)]).transpose();
        Xt.row(r) = z.transpose();
        Yt.row(r) = setup.sources[static_cast<std::size_t>(t)](z).transpose();
      }
      X[static_cast<std::size_t>(t)] = std::move(Xt);
      Y[static_cast<std::size_t>(t)] = std::move(Yt);
    }
  } else {
    throw mfk::config_error("train: needs either a manifest or init_counts");
  }

  if (costs.empty()) throw mfk::config_error("train: no level costs given");
  if (static_cast<int>(costs.size()) != n_levels)
    throw mfk::config_error("train: need one cost per level");

  // Initial points leave the pool; a point is acquired at most once.
  const auto& X1 = X.front();
  for (int i = 0; i < setup.pool.size(); ++i) {
    for (int r = 0; r < X1.rows(); ++r)
      if ((X1.row(r) - setup.pool.Z.row(i)).cwiseAbs().maxCoeff() <= 1e-12) {
        setup.pool.used[static_cast<std::size_t>(i)] = true;
        break;
      }
  }

  mfk::SequentialConfig scfg;
  scfg.epsilon = cfg.epsilon;
  scfg.max_iterations = cfg.train_max_iterations;
  scfg.fit = cfg.fit;
  vlog("train: " + std::to_string(n_levels) + " levels, pool " +
       std::to_string(setup.pool.size()));
  mfk::SequentialResult res =
      mfk::run_sequential(setup.sources, std::move(X), std::move(Y), setup.pool, costs, scfg);

  mfk::ModelBundle bundle;
  bundle.models = std::move(res.models);
  bundle.output_names = setup.output_names;
  bundle.input_names = setup.input_names;
  bundle.ranges = setup.ranges;
  bundle.reduced_indices = setup.reduced_indices;

  const std::string dir = cfg.output_dir;
  mfk::save_models(dir + "/models.json", bundle);
  mfk::write_training_log(dir + "/training_log.jsonl", res.log);
  nlohmann::ordered_json man;
  man["levels"] = nlohmann::ordered_json::array();
  for (int t = 0; t < n_levels; ++t) {
    mfk::Dataset d;
    d.input_names = setup.input_names;
    d.output_names = setup.output_names;
    d.X = res.X[static_cast<std::size_t>(t)];
    d.Y = res.Y[static_cast<std::size_t>(t)];
    const std::string name = "level" + std::to_string(t + 1) + ".csv";
    mfk::save_dataset(dir + "/" + name, d);
    nlohmann::ordered_json lv;
    lv["path"] = name;
    lv["cost"] = costs[static_cast<std::size_t>(t)];
    man["levels"].push_back(std::move(lv));
  }
  mfk::detail::atomic_write(dir + "/manifest.json", man.dump(2) + "\n");

  std::cout << "levels " << n_levels << "\n";
  std::cout << "outputs " << join(setup.output_names) << "\n";
  std::cout << "iterations " << res.log.size() << "\n";
  std::cout << "converged " << (res.converged ? "yes" : "no") << "\n";
  std::cout << "total cost " << fmt(res.total_cost) << "\n";
  std::cout << "final sizes";
  for (const auto& Xt : res.X) std::cout << " " << Xt.rows();
  std::cout << "\n";
  std::cout << "wrote " << dir << "/models.json\n";
  std::cout << "wrote " << dir << "/training_log.jsonl\n";
  for (int t = 0; t < n_levels; ++t)
    std::cout << "wrote " << dir << "/level" << (t + 1) << ".csv\n";
  std::cout << "wrote " << dir << "/manifest.json\n";
}

// ------------------------------------------------------------------ predict

struct PredictOpts {
  std::string model;
  std::string inputs;
  std::string output;
};

void run_predict(const PredictOpts& o) {
  const mfk::ModelBundle bundle = mfk::load_models(o.model);
  const mfk::CsvTable t = mfk::read_csv(o.inputs);
  if (t.header != bundle.input_names)
    throw mfk::data_error(o.inputs + ": input columns must be " + join(bundle.input_names));
  if (t.values.rows() < 1) throw mfk::data_error(o.inputs + ": no input rows");

  std::vector<std::string> header = bundle.input_names;
  for (const auto& name : bundle.output_names) header.push_back("mean_" + name);
  for (const auto& name : bundle.output_names) header.push_back("std_" + name);

  const int n_out = static_cast<int>(bundle.output_names.size());
  mfk::Matrix out(t.values.rows(), t.values.cols() + 2 * n_out);
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    const mfk::Vector z = t.values.row(r).transpose();
    out.row(r).head(t.values.cols()) = t.values.row(r);
    for (int j = 0; j < n_out; ++j) {
      const auto p = bundle.models[static_cast<std::size_t>(j)].predict(z);
      out(r, t.values.cols() + j) = p.mean;
      out(r, t.values.cols() + n_out + j) = std::sqrt(std::max(0.0, p.variance));
    }
  }

  if (!o.output.empty()) {
    mfk::write_csv(o.output, header, out);
    std::cout << "wrote " << o.output << "\n";
  } else {
    std::cout << join(header) << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", out(r, c));
        std::cout << buf << (c + 1 < out.cols() ? ',' : '\n');
      }
  }
}

// ------------------------------------------------------------------- report

std::string sobol_csv(const mfk::ModelBundle& bundle, const mfk::SobolReport& rep) {
  std::ostringstream os;
  os << "output,param,first_order,total\n";
  for (std::size_t j = 0; j < rep.per_output.size(); ++j)
    for (std::size_t k = 0; k < rep.params.size(); ++k)
      os << bundle.output_names[j] << "," << rep.params[k] << ","
         << fmt(rep.per_output[j].first_order[static_cast<Eigen::Index>(k)]) << ","
         << fmt(rep.per_output[j].total[static_cast<Eigen::Index>(k)]) << "\n";
  return os.str();
}

void print_sobol(const mfk::ModelBundle& bundle, const mfk::SobolReport& rep) {
  for (std::size_t j = 0; j < rep.per_output.size(); ++j) {
    std::cout << bundle.output_names[j] << " top " << rep.top_geometric[j] << "\n";
    for (std::size_t k = 0; k < rep.params.size(); ++k)
      std::cout << "  " << rep.params[k] << " first "
                << fmt(rep.per_output[j].first_order[static_cast<Eigen::Index>(k)])
                << " total "
                << fmt(rep.per_output[j].total[static_cast<Eigen::Index>(k)]) << "\n";
  }
}

int name_index(const std::vector<std::string>& names, const std::string& want) {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == want) return static_cast<int>(k);
  return -1;
}

struct ReportOpts {
  std::string model;
  std::string config;
  std::string output = "out";
  int samples = 4096;
  std::uint64_t seed = 0;
  int resolution = 33;
  bool output_set = false;
  bool samples_set = false;
  bool seed_set = false;
  bool resolution_set = false;
};

void run_report(ReportOpts o) {
  if (!o.config.empty()) {
    const mfk::RunConfig cfg = mfk::load_run_config(o.config);
    if (!o.samples_set) o.samples = cfg.sobol_samples;
    if (!o.seed_set) o.seed = cfg.seed;
    if (!o.resolution_set) o.resolution = cfg.surface_resolution;
    if (!o.output_set) o.output = cfg.output_dir;
  }
  const mfk::ModelBundle bundle = mfk::load_models(o.model);
  const mfk::SobolReport rep = mfk::sobol_report(bundle, o.samples, o.seed);
  mfk::detail::atomic_write(o.output + "/sobol.csv", sobol_csv(bundle, rep));
  print_sobol(bundle, rep);
  std::cout << "wrote " << o.output << "/sobol.csv\n";

  const int p = static_cast<int>(bundle.input_names.size());
  if (p < 2) return;
  for (std::size_t j = 0; j < bundle.models.size(); ++j) {
    const std::string& name = bundle.output_names[j];
    std::string other = "M";
    if (name == "c_y") other = "ASS_AL";
    if (name == "c_m") other = "C_LOA";
    int ax = name_index(bundle.input_names, "phi");
    int ay = name_index(bundle.input_names, other);
    if (ax < 0 || ay < 0 || ax == ay) {
      ax = 0;
      ay = 1;
    }
    const auto& model = bundle.models[j];
    const mfk::ResponseSurface rs = mfk::response_surface(
        [&model](const mfk::Vector& z) { return model.predict(z).mean; }, p, ax, ay,
        o.resolution, o.resolution);
    const auto [xlo, xhi] = bundle.ranges[static_cast<std::size_t>(ax)];
    const auto [ylo, yhi] = bundle.ranges[static_cast<std::size_t>(ay)];
    std::ostringstream os;
    os << bundle.input_names[static_cast<std::size_t>(ax)] << ","
       << bundle.input_names[static_cast<std::size_t>(ay)] << "," << name << "\n";
    for (Eigen::Index i = 0; i < rs.xs.size(); ++i)
      for (Eigen::Index k = 0; k < rs.ys.size(); ++k)
        os << fmt(xlo + rs.xs[i] * (xhi - xlo)) << "," << fmt(ylo + rs.ys[k] * (yhi - ylo))
           << "," << fmt(rs.values(i, k)) << "\n";
    const std::string path = o.output + "/surface_" + name + ".csv";
    mfk::detail::atomic_write(path, os.str());
    std::cout << "wrote " << path << "\n";
  }
}

// -------------------------------------------------------------- sensitivity

struct SobolOpts {
  std::string model;
  int samples = 4096;
  std::uint64_t seed = 0;
  std::string output;
};

void run_sensitivity_sobol(const SobolOpts& o) {
  const mfk::ModelBundle bundle = mfk::load_models(o.model);
  const mfk::SobolReport rep = mfk::sobol_report(bundle, o.samples, o.seed);
  print_sobol(bundle, rep);
  if (!o.output.empty()) {
    mfk::detail::atomic_write(o.output, sobol_csv(bundle, rep));
    std::cout << "wrote " << o.output << "\n";
  }
}

struct SubspaceOpts {
  std::string model;
  int samples = 500;
  double threshold = 0.95;
  double cutoff = 0.1;
  std::uint64_t seed = 0;
  std::string output;
};

void run_sensitivity_subspace(const SubspaceOpts& o) {
  const mfk::ModelBundle bundle = mfk::load_models(o.model);
  const int p = static_cast<int>(bundle.input_names.size());
  const int phi = name_index(bundle.input_names, "phi");
  nlohmann::ordered_json j;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < bundle.models.size(); ++m) {
    const auto& model = bundle.models[m];
    const mfk::Matrix sigma = mfk::gradient_covariance(
        [&model](const mfk::Vector& z) { return model.predict_gradient(z); }, p, o.samples,
        o.seed);
    const mfk::ActiveSubspaceResult eig = mfk::eigendecompose(sigma);
    const mfk::ReducedSelection sel = mfk::select_reduced_inputs(
        eig, o.threshold, o.cutoff,
        phi >= 0 ? std::optional<int>(phi) : std::nullopt);
    std::vector<std::string> names;
    for (int k : sel.indices) names.push_back(bundle.input_names[static_cast<std::size_t>(k)]);
    std::cout << bundle.output_names[m] << " subspace " << sel.subspace_dim << " selected "
              << join(names) << "\n";
    std::cout << "  eigenvalues";
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k)
      std::cout << " " << fmt(eig.eigenvalues[k]);
    std::cout << "\n";
    nlohmann::ordered_json jo;
    jo["name"] = bundle.output_names[m];
    jo["eigenvalues"] = std::vector<double>(eig.eigenvalues.begin(), eig.eigenvalues.end());
    jo["loadings"] = std::vector<double>(sel.loadings.begin(), sel.loadings.end());
    jo["subspace_dim"] = sel.subspace_dim;
    jo["selected"] = names;
    outs.push_back(std::move(jo));
  }
  j["outputs"] = std::move(outs);
  if (!o.output.empty()) {
    mfk::detail::atomic_write(o.output, j.dump(2) + "\n");
    std::cout << "wrote " << o.output << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-fidelity wind-load surrogate toolkit"};
  app.require_subcommand(1);

  auto iopt = std::make_shared<IsherwoodOpts>();
  auto* ish = app.add_subcommand("isherwood", "evaluate the empirical correlation");
  ish->add_option("--geometry", iopt->geometry, "ship geometry JSON")->required();
  ish->add_option("--phi", iopt->phi, "apparent wind angle, degrees off the bow")->required();
  ish->add_option("--table", iopt->table, "coefficient table CSV");
  ish->add_option("--ranges", iopt->ranges, "validity ranges CSV");
  ish->callback([iopt] { run_isherwood(*iopt); });

  auto ropt = std::make_shared<ConfigOpts>();
  auto* red = app.add_subcommand("reduce", "select the reduced input coordinates");
  red->add_option("--config", ropt->config, "run configuration JSON")->required();
  red->add_option("--seed", ropt->seed, "seed override");
  red->add_option("--output", ropt->output, "output directory override");
  red->callback([ropt] { run_reduce(*ropt); });

  auto topt = std::make_shared<ConfigOpts>();
  auto* trn = app.add_subcommand("train", "run the sequential training loop");
  trn->add_option("--config", topt->config, "run configuration JSON")->required();
  trn->add_option("--seed", topt->seed, "seed override");
  trn->add_option("--output", topt->output, "output directory override");
  trn->callback([topt] { run_train(*topt); });

  auto popt = std::make_shared<PredictOpts>();
  auto* prd = app.add_subcommand("predict", "evaluate a trained bundle on input rows");
  prd->add_option("--model", popt->model, "models.json from train")->required();
  prd->add_option("--inputs", popt->inputs, "CSV of scaled reduced inputs")->required();
  prd->add_option("--output", popt->output, "output CSV (default stdout)");
  prd->callback([popt] { run_predict(*popt); });

  auto xopt = std::make_shared<ReportOpts>();
  auto* rep = app.add_subcommand("report", "sensitivity indices and response surfaces");
  rep->add_option("--model", xopt->model, "models.json from train")->required();
  rep->add_option("--config", xopt->config, "run configuration JSON");
  auto* oo = rep->add_option("--output", xopt->output, "output directory");
  auto* os_ = rep->add_option("--samples", xopt->samples, "pick-freeze sample count");
  auto* osd = rep->add_option("--seed", xopt->seed, "sampling seed");
  auto* orz = rep->add_option("--resolution", xopt->resolution, "surface grid resolution");
  rep->callback([xopt, oo, os_, osd, orz] {
    xopt->output_set = oo->count() > 0;
    xopt->samples_set = os_->count() > 0;
    xopt->seed_set = osd->count() > 0;
    xopt->resolution_set = orz->count() > 0;
    run_report(*xopt);
  });

  auto* sen = app.add_subcommand("sensitivity", "sensitivity analyses");
  sen->require_subcommand(1);
  auto sopt = std::make_shared<SobolOpts>();
  auto* ssb = sen->add_subcommand("sobol", "pick-freeze variance decomposition");
  ssb->add_option("--model", sopt->model, "models.json from train")->required();
  ssb->add_option("--samples", sopt->samples, "pick-freeze sample count");
  ssb->add_option("--seed", sopt->seed, "sampling seed");
  ssb->add_option("--output", sopt->output, "output CSV");
  ssb->callback([sopt] { run_sensitivity_sobol(*sopt); });

  auto bopt = std::make_shared<SubspaceOpts>();
  auto* ssp = sen->add_subcommand("subspace", "gradient outer-product eigenanalysis");
  ssp->add_option("--model", bopt->model, "models.json from train")->required();
  ssp->add_option("--samples", bopt->samples, "gradient sample count");
  ssp->add_option("--threshold", bopt->threshold, "captured variance threshold");
  ssp->add_option("--cutoff", bopt->cutoff, "loading cutoff");
  ssp->add_option("--seed", bopt->seed, "sampling seed");
  ssp->add_option("--output", bopt->output, "output JSON");
  ssp->callback([bopt] { run_sensitivity_subspace(*bopt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const mfk::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mfk::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mfk::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
