#ifndef MFKRIG_FIT_HPP
#define MFKRIG_FIT_HPP

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cstdint>
#include <functional>
#include <limits>

#include "mfkrig/gp.hpp"

namespace mfk {

struct FitConfig {
  int restarts = 8;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double length_lo = 1e-2;   // scaled-input length-scale bounds for initialization
  double length_hi = 1e1;
  double signal2_lo = 1e-4;  // x var(y)
  double signal2_hi = 1e1;   // x var(y)
  double nugget2_lo = 1e-10;
  double nugget2_hi = 1e-1;  // x var(y)
  std::uint64_t seed = 0;
};

namespace detail {

/// Objective wrapper: value and gradient of f at x, exceptions mapped to NaN
/// so they never unwind through GSL. Tracks the best finite point seen.
struct ObjectiveState {
  std::function<double(const Vector&, Vector&)> f;
  Vector best_x;
  double best_value = -std::numeric_limits<double>::infinity();

  double eval(const Vector& x, Vector& grad) {
    double v;
    try {
      v = f(x, grad);
    } catch (const std::exception&) {
      grad.setZero();
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(v) && v > best_value) {
      best_value = v;
      best_x = x;
    }
    return v;
  }
};

inline double gsl_f(const gsl_vector* v, void* p) {
  auto* st = static_cast<ObjectiveState*>(p);
  Vector x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  Vector grad(v->size);
  const double val = st->eval(x, grad);
  return std::isfinite(val) ? -val : GSL_NAN;
}

inline void gsl_df(const gsl_vector* v, void* p, gsl_vector* g) {
  auto* st = static_cast<ObjectiveState*>(p);
  Vector x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  Vector grad(v->size);
  const double val = st->eval(x, grad);
  for (std::size_t i = 0; i < v->size; ++i)
    gsl_vector_set(g, i, std::isfinite(val) ? -grad[i] : GSL_NAN);
}

inline void gsl_fdf(const gsl_vector* v, void* p, double* f, gsl_vector* g) {
  *f = gsl_f(v, p);
  gsl_df(v, p, g);
}

}  // namespace detail

/// Maximizes f (value + gradient) from x0 with BFGS. Returns the best finite
/// point encountered, which is never worse than x0's value.
inline void maximize_bfgs(const std::function<double(const Vector&, Vector&)>& f,
                          const Vector& x0, int max_iterations, double gradient_tolerance,
                          Vector& best_x, double& best_value) {
  static auto* silence = gsl_set_error_handler_off();
  (void)silence;

  detail::ObjectiveState state;
  state.f = f;
  state.best_x = x0;
  {
    Vector g(x0.size());
    state.eval(x0, g);
  }

  gsl_multimin_function_fdf F;
  F.n = static_cast<std::size_t>(x0.size());
  F.f = detail::gsl_f;
  F.df = detail::gsl_df;
  F.fdf = detail::gsl_fdf;
  F.params = &state;

  gsl_vector* v = gsl_vector_alloc(F.n);
  for (std::size_t i = 0; i < F.n; ++i) gsl_vector_set(v, i, x0[static_cast<int>(i)]);
  gsl_multimin_fdfminimizer* s =
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, F.n);
  if (gsl_multimin_fdfminimizer_set(s, &F, v, 0.1, 0.1) == GSL_SUCCESS) {
    for (int it = 0; it < max_iterations; ++it) {
      if (gsl_multimin_fdfminimizer_iterate(s) != GSL_SUCCESS) break;
      if (gsl_multimin_test_gradient(s->gradient, gradient_tolerance) == GSL_SUCCESS) break;
    }
  }
  gsl_multimin_fdfminimizer_free(s);
  gsl_vector_free(v);

  if (state.best_value > best_value) {
    best_value = state.best_value;
    best_x = state.best_x;
  }
}

namespace detail {

/// Latin-hypercube initial points in packed hyperparameter coordinates.
inline Matrix fit_starts(int count, int dim, const Vector& y, const FitConfig& cfg,
                         std::uint64_t seed) {
  const double ymean = y.mean();
  const double vy = std::max((y.array() - ymean).square().mean(), 1e-12);
  const double sy = std::sqrt(vy);
  const double n2_lo = cfg.nugget2_lo;
  const double n2_hi = std::max(cfg.nugget2_hi * vy, 10.0 * n2_lo);

  Matrix unit = latin_hypercube(count, dim + 3, seed);
  Matrix starts(count, dim + 3);
  for (int i = 0; i < count; ++i) {
    starts(i, 0) = ymean + (2.0 * unit(i, 0) - 1.0) * sy;
    starts(i, 1) = std::log(cfg.signal2_lo * vy) +
                   unit(i, 1) * std::log(cfg.signal2_hi / cfg.signal2_lo);
    for (int m = 0; m < dim; ++m)
      starts(i, 2 + m) =
          std::log(cfg.length_lo) + unit(i, 2 + m) * std::log(cfg.length_hi / cfg.length_lo);
    starts(i, dim + 2) = std::log(n2_lo) + unit(i, dim + 2) * std::log(n2_hi / n2_lo);
  }
  // first start is a plain default rather than a random draw
  starts(0, 0) = ymean;
  starts(0, 1) = std::log(vy);
  for (int m = 0; m < dim; ++m) starts(0, 2 + m) = 0.0;
  starts(0, dim + 2) = std::log(std::max(1e-6 * vy, n2_lo));
  return starts;
}

/// Hard edges of the hyperparameter search box in packed coordinates. Only
/// the numerically load-bearing edges are closed: signal2 and the length
/// scales from above, so the optimizer cannot run up the diffuse likelihood
/// ridge where sigma2 grows without bound and predictive variances drown in
/// round-off, and nugget2 from below, which keeps the kernel matrix
/// invertible. The other edges stay open.
inline void packed_bounds(int dim, double vy, const FitConfig& cfg, Vector& lo, Vector& hi) {
  const double inf = std::numeric_limits<double>::infinity();
  lo = Vector::Constant(dim + 3, -inf);
  hi = Vector::Constant(dim + 3, inf);
  hi[1] = std::log(cfg.signal2_hi * vy);
  for (int m = 0; m < dim; ++m) hi[2 + m] = std::log(cfg.length_hi);
  lo[dim + 2] = std::log(cfg.nugget2_lo);
}

inline double target_variance(const Vector& y) {
  return std::max((y.array() - y.mean()).square().mean(), 1e-12);
}

}  // namespace detail

/// Multi-start maximum-likelihood fit. When warm is given the search runs from
/// the warm point plus the plain default start instead of the full restart
/// set. The returned model's likelihood is never below that of any start
/// point.
inline GpModel fit_gp(const Matrix& X, const Vector& y, const FitConfig& cfg = {},
                      const GpHyperparameters* warm = nullptr) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n < 2) throw std::invalid_argument("fit requires at least 2 observations");
  if (y.size() != n) throw std::invalid_argument("target count does not match inputs");
  if (cfg.restarts < 1) throw std::invalid_argument("restarts must be >= 1");

  Matrix starts;
  if (warm) {
    starts.resize(2, d + 3);
    starts.row(0) = pack_hyperparameters(*warm).transpose();
    starts.row(1) = detail::fit_starts(1, d, y, cfg, cfg.seed + 1).row(0);
  } else {
    starts = detail::fit_starts(cfg.restarts, d, y, cfg, cfg.seed);
  }

  // the objective is flat beyond the closed box edges (clamped evaluation,
  // gradient zeroed there), so BFGS respects the search bounds; the box is
  // widened to contain every start so a warm point is never clamped away
  Vector lo, hi;
  detail::packed_bounds(d, detail::target_variance(y), cfg, lo, hi);
  for (int r = 0; r < starts.rows(); ++r) {
    lo = lo.cwiseMin(starts.row(r).transpose());
    hi = hi.cwiseMax(starts.row(r).transpose());
  }
  auto objective = [&X, &y, d, lo, hi](const Vector& u, Vector& grad) {
    const Vector uc = u.cwiseMax(lo).cwiseMin(hi);
    const GpHyperparameters hp = unpack_hyperparameters(uc, d);
    const double value = log_marginal_likelihood(X, y, hp, &grad);
    for (int k = 0; k < u.size(); ++k)
      if (u[k] != uc[k]) grad[k] = 0.0;
    return value;
  };

  Vector best_x;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < starts.rows(); ++r)
    maximize_bfgs(objective, starts.row(r).transpose(), cfg.max_iterations,
                  cfg.gradient_tolerance, best_x, best_value);

  if (!std::isfinite(best_value))
    throw numerical_error("all hyperparameter starts failed to evaluate");
  best_x = best_x.cwiseMax(lo).cwiseMin(hi);
  return GpModel(X, y, unpack_hyperparameters(best_x, d));
}

}  // namespace mfk

#endif
