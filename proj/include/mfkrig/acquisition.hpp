#ifndef MFKRIG_ACQUISITION_HPP
#define MFKRIG_ACQUISITION_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfkrig/multifidelity.hpp"
#include "mfkrig/scaling.hpp"

namespace mfk {

/// Admissible loading configurations: one row of geometric reduced
/// coordinates (unscaled) per configuration.
struct ConfigurationCatalogue {
  std::vector<std::string> labels;
  std::vector<std::string> param_names;
  Matrix values;

  void validate() const {
    if (values.rows() != static_cast<Eigen::Index>(labels.size()))
      throw data_error("catalogue: label/row count mismatch");
    if (values.cols() != static_cast<Eigen::Index>(param_names.size()))
      throw data_error("catalogue: header/column count mismatch");
    if (values.rows() < 1) throw data_error("catalogue: no configurations");
    if (!values.allFinite()) throw data_error("catalogue: non-finite entry");
  }
};

/// Scaled candidate points. Geometric coordinates come from catalogue rows,
/// the trailing angle coordinate is continuous.
struct CandidatePool {
  Matrix Z;
  std::vector<int> config_index;
  std::vector<bool> feasible;
  std::vector<bool> used;

  int size() const { return static_cast<int>(Z.rows()); }
};

/// Draws `size` candidates: a uniformly chosen catalogue row plus a uniform
/// angle over the scaler's angle range, then scales into [0,1]^p. Points
/// falling outside the box are kept but flagged infeasible.
inline CandidatePool generate_pool(const ConfigurationCatalogue& catalogue,
                                   const InputScaler& reduced_scaler, int size,
                                   std::uint64_t seed) {
  catalogue.validate();
  const int p = reduced_scaler.dim();
  if (p != static_cast<int>(catalogue.param_names.size()) + 1)
    throw std::invalid_argument("scaler must cover catalogue parameters plus the angle");
  if (size < 1) throw std::invalid_argument("pool size must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(catalogue.values.rows()) - 1);
  const auto [phi_lo, phi_hi] = reduced_scaler.ranges().back();
  std::uniform_real_distribution<double> phi(phi_lo, phi_hi);

  CandidatePool pool;
  pool.Z.resize(size, p);
  pool.config_index.resize(size);
  pool.feasible.assign(size, true);
  pool.used.assign(size, false);
  for (int i = 0; i < size; ++i) {
    const int c = pick(rng);
    Vector raw(p);
    raw.head(p - 1) = catalogue.values.row(c).transpose();
    raw[p - 1] = phi(rng);
    const Vector z = reduced_scaler.scale(raw);
    pool.Z.row(i) = z.transpose();
    pool.config_index[i] = c;
    pool.feasible[i] = (z.minCoeff() >= 0.0 && z.maxCoeff() <= 1.0);
  }
  return pool;
}

/// Integrated-variance reduction from adding z at fidelity level t:
///   sum_{k=1}^t var_k(z) * prod_{j=k}^{t-1} rho_j^2 * prod_m l_{k,m}
/// where var_k is the level-k residual posterior variance.
inline double imse_reduction(const MultiFidelityModel& model, const Vector& z, int t) {
  if (t < 1 || t > model.levels()) throw std::invalid_argument("level out of range");
  double total = 0.0;
  for (int k = 1; k <= t; ++k) {
    double term = model.residual_variance(z, k);
    for (int j = k; j <= t - 1; ++j) term *= model.rho(j) * model.rho(j);
    term *= model.level(k).hyperparameters().length.prod();
    total += term;
  }
  return total;
}

struct AcquisitionScore {
  double gamma = 0.0;
  std::vector<double> components;  // per-output cost-scaled reductions
};

/// Cost-aware score: per output i, gamma_i = IMSE reduction at (z, t) divided
/// by the cumulative cost of evaluating levels 1..t; gamma aggregates as the
/// Euclidean norm over outputs.
inline AcquisitionScore score(const std::vector<MultiFidelityModel>& models, const Vector& z,
                              int t, const std::vector<double>& costs) {
  if (models.empty()) throw std::invalid_argument("need at least one model");
  if (static_cast<int>(costs.size()) < models.front().levels())
    throw std::invalid_argument("need one cost per level");
  double denom = 0.0;
  for (int k = 1; k <= t; ++k) {
    if (!(costs[static_cast<std::size_t>(k - 1)] > 0.0))
      throw std::invalid_argument("costs must be positive");
    denom += costs[static_cast<std::size_t>(k - 1)];
  }
  AcquisitionScore s;
  double sq = 0.0;
  for (const auto& m : models) {
    const double g = imse_reduction(m, z, t) / denom;
    s.components.push_back(g);
    sq += g * g;
  }
  s.gamma = std::sqrt(sq);
  return s;
}

struct Selection {
  int pool_index = -1;
  int level = 0;
  AcquisitionScore best;
};

/// Exhaustive argmax of the score over feasible unused candidates and all
/// levels; ties prefer the lower level, then the lower pool index.
inline std::optional<Selection> select_next(const std::vector<MultiFidelityModel>& models,
                                            const CandidatePool& pool,
                                            const std::vector<double>& costs) {
  if (models.empty()) throw std::invalid_argument("need at least one model");
  const int s = models.front().levels();
  Selection best;
  double best_gamma = -1.0;
  for (int i = 0; i < pool.size(); ++i) {
    if (!pool.feasible[static_cast<std::size_t>(i)] ||
        pool.used[static_cast<std::size_t>(i)])
      continue;
    const Vector z = pool.Z.row(i).transpose();
    for (int t = 1; t <= s; ++t) {
      AcquisitionScore sc = score(models, z, t, costs);
      const bool wins = sc.gamma > best_gamma ||
                        (sc.gamma == best_gamma && best.pool_index >= 0 && t < best.level);
      if (wins) {
        best_gamma = sc.gamma;
        best.pool_index = i;
        best.level = t;
        best.best = std::move(sc);
      }
    }
  }
  if (best.pool_index < 0) return std::nullopt;
  return best;
}

/// Evaluates one fidelity level at a scaled reduced point; returns one value
/// per output column.
using LevelEvaluator = std::function<Vector(const Vector&)>;

struct SequentialConfig {
  double epsilon = 0.1;
  int max_iterations = 500;
  FitConfig fit;
};

struct IterationRecord {
  int iteration = 0;
  int pool_index = -1;
  int level = 0;
  Vector z;
  double gamma = 0.0;
  std::vector<double> gamma_components;
  double stop_metric = 0.0;  // post-fit pool max of top-level IMSE reduction
  std::vector<int> sizes;    // per-level rows after the append
  double cumulative_cost = 0.0;
};

struct SequentialResult {
  std::vector<MultiFidelityModel> models;
  std::vector<Matrix> X;  // per-level designs (scaled)
  std::vector<Matrix> Y;  // per-level outputs, one column per output
  std::vector<IterationRecord> log;
  double total_cost = 0.0;
  bool converged = false;
};

namespace detail {

inline std::vector<MultiFidelityModel> fit_outputs(const std::vector<Matrix>& X,
                                                   const std::vector<Matrix>& Y,
                                                   const FitConfig& cfg,
                                                   const std::vector<MultiFidelityModel>* warm) {
  const int n_out = static_cast<int>(Y.front().cols());
  std::vector<MultiFidelityModel> models;
  models.reserve(static_cast<std::size_t>(n_out));
  for (int j = 0; j < n_out; ++j) {
    std::vector<Vector> yj;
    yj.reserve(X.size());
    for (const auto& Yt : Y) yj.push_back(Yt.col(j));
    const MultiFidelityModel* w = warm ? &(*warm)[static_cast<std::size_t>(j)] : nullptr;
    models.push_back(fit_recursive(X, yj, cfg, w));
  }
  return models;
}

inline double pool_max_top_imse(const std::vector<MultiFidelityModel>& models,
                                const CandidatePool& pool) {
  const int s = models.front().levels();
  double metric = 0.0;
  for (int i = 0; i < pool.size(); ++i) {
    if (!pool.feasible[static_cast<std::size_t>(i)] ||
        pool.used[static_cast<std::size_t>(i)])
      continue;
    const Vector z = pool.Z.row(i).transpose();
    for (const auto& m : models) metric = std::max(metric, imse_reduction(m, z, s));
  }
  return metric;
}

}  // namespace detail

/// Cost-aware sequential enrichment. Each round refits every level (warm
/// start plus one fresh restart), stops once the pool-wide maximum top-level
/// IMSE reduction drops below epsilon or the round budget is exhausted, and
/// otherwise evaluates the selected point at every level up to the chosen one
/// so the designs stay nested. Selected points leave the pool.
inline SequentialResult run_sequential(const std::vector<LevelEvaluator>& sources,
                                       std::vector<Matrix> X, std::vector<Matrix> Y,
                                       CandidatePool pool, const std::vector<double>& costs,
                                       const SequentialConfig& cfg) {
  const int s = static_cast<int>(sources.size());
  if (s < 1) throw std::invalid_argument("need at least one level source");
  if (static_cast<int>(X.size()) != s || static_cast<int>(Y.size()) != s)
    throw std::invalid_argument("initial datasets must cover every level");
  if (static_cast<int>(costs.size()) != s)
    throw std::invalid_argument("need one cost per level");
  for (double c : costs)
    if (!(c > 0.0)) throw std::invalid_argument("costs must be positive");
  if (cfg.max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  for (const auto& Yt : Y)
    if (Yt.cols() != Y.front().cols())
      throw std::invalid_argument("levels disagree on output count");

  SequentialResult res;
  res.models = detail::fit_outputs(X, Y, cfg.fit, nullptr);
  double metric = detail::pool_max_top_imse(res.models, pool);

  for (int iter = 0; iter < cfg.max_iterations && metric >= cfg.epsilon; ++iter) {
    auto sel = select_next(res.models, pool, costs);
    if (!sel) break;  // pool exhausted
    const Vector z = pool.Z.row(sel->pool_index).transpose();
    for (int t = 1; t <= sel->level; ++t) {
      const Vector out = sources[static_cast<std::size_t>(t - 1)](z);
      if (out.size() != Y[static_cast<std::size_t>(t - 1)].cols())
        throw data_error("source output count mismatch at level " + std::to_string(t));
      auto& Xt = X[static_cast<std::size_t>(t - 1)];
      auto& Yt = Y[static_cast<std::size_t>(t - 1)];
      Xt.conservativeResize(Xt.rows() + 1, Eigen::NoChange);
      Xt.row(Xt.rows() - 1) = z.transpose();
      Yt.conservativeResize(Yt.rows() + 1, Eigen::NoChange);
      Yt.row(Yt.rows() - 1) = out.transpose();
      res.total_cost += costs[static_cast<std::size_t>(t - 1)];
    }
    pool.used[static_cast<std::size_t>(sel->pool_index)] = true;

    res.models = detail::fit_outputs(X, Y, cfg.fit, &res.models);
    metric = detail::pool_max_top_imse(res.models, pool);

    IterationRecord rec;
    rec.iteration = iter;
    rec.pool_index = sel->pool_index;
    rec.level = sel->level;
    rec.z = z;
    rec.gamma = sel->best.gamma;
    rec.gamma_components = sel->best.components;
    rec.stop_metric = metric;
    for (const auto& Xt : X) rec.sizes.push_back(static_cast<int>(Xt.rows()));
    rec.cumulative_cost = res.total_cost;
    res.log.push_back(std::move(rec));
  }

  res.converged = metric < cfg.epsilon;
  res.X = std::move(X);
  res.Y = std::move(Y);
  return res;
}

}  // namespace mfk

#endif
