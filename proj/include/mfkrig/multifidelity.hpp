#ifndef MFKRIG_MULTIFIDELITY_HPP
#define MFKRIG_MULTIFIDELITY_HPP

#include <string>
#include <vector>

#include "mfkrig/fit.hpp"
#include "mfkrig/gp.hpp"

namespace mfk {

/// One fidelity level's design and targets (one column per output).
struct FidelityDataset {
  Matrix X;
  Matrix Y;
  std::vector<std::string> output_names;
};

struct NestingViolation {
  int level = 0;  // 1-based level whose row has no parent
  int row = 0;
};

/// Verifies X^t is a subset of X^{t-1} rowwise (componentwise |diff| <= tol).
inline std::vector<NestingViolation> check_nesting(const std::vector<Matrix>& designs,
                                                   double tol = 1e-12) {
  std::vector<NestingViolation> out;
  for (std::size_t t = 1; t < designs.size(); ++t) {
    const Matrix& lower = designs[t - 1];
    const Matrix& upper = designs[t];
    for (int r = 0; r < upper.rows(); ++r) {
      bool found = false;
      for (int q = 0; q < lower.rows() && !found; ++q)
        found = ((upper.row(r) - lower.row(q)).cwiseAbs().maxCoeff() <= tol);
      if (!found) out.push_back({static_cast<int>(t) + 1, r});
    }
  }
  return out;
}

/// Recursive autoregressive surrogate: C_t(x) = rho_{t-1} C_{t-1}(x) + r_t(x),
/// with level 1 a plain GP and each higher level a GP on the scaled residuals.
class MultiFidelityModel {
 public:
  MultiFidelityModel() = default;

  MultiFidelityModel(std::vector<GpModel> residual_gps, std::vector<double> rho)
      : gps_(std::move(residual_gps)), rho_(std::move(rho)) {
    if (gps_.empty()) throw std::invalid_argument("need at least one level");
    if (rho_.size() + 1 != gps_.size())
      throw std::invalid_argument("need exactly one rho per level transition");
    for (const auto& g : gps_)
      if (g.dim() != gps_.front().dim())
        throw std::invalid_argument("levels disagree on input dimension");
  }

  int levels() const { return static_cast<int>(gps_.size()); }
  int dim() const { return gps_.front().dim(); }

  using Prediction = GpModel::Prediction;

  /// Posterior mean and variance of fidelity level t (1-based):
  ///   mean_t = rho_{t-1} mean_{t-1} + mu_t + K_t(x, X^t) a_t
  ///   var_t  = rho_{t-1}^2 var_{t-1} + k_t(x, x) - K_t(x, X^t) v_t(x)
  Prediction predict_level(const Vector& x, int t) const {
    require_level(t);
    Prediction p = gps_[0].predict(x);
    for (int k = 2; k <= t; ++k) {
      const Prediction r = gps_[static_cast<std::size_t>(k - 1)].predict(x);
      const double rho = rho_[static_cast<std::size_t>(k - 2)];
      p.mean = rho * p.mean + r.mean;
      p.variance = rho * rho * p.variance + r.variance;
    }
    return p;
  }

  Prediction predict(const Vector& x) const { return predict_level(x, levels()); }

  /// Gradient of the top-level posterior mean.
  Vector predict_gradient(const Vector& x) const {
    Vector g = gps_[0].predict_gradient(x);
    for (int k = 2; k <= levels(); ++k)
      g = rho_[static_cast<std::size_t>(k - 2)] * g +
          gps_[static_cast<std::size_t>(k - 1)].predict_gradient(x);
    return g;
  }

  /// Posterior variance of the level-t residual process alone.
  double residual_variance(const Vector& x, int t) const {
    require_level(t);
    return gps_[static_cast<std::size_t>(t - 1)].predict(x).variance;
  }

  const GpModel& level(int t) const {
    require_level(t);
    return gps_[static_cast<std::size_t>(t - 1)];
  }

  /// rho multiplying level t into level t+1, t in [1, levels-1].
  double rho(int t) const {
    if (t < 1 || t >= levels()) throw std::invalid_argument("rho index out of range");
    return rho_[static_cast<std::size_t>(t - 1)];
  }

  const std::vector<double>& rhos() const { return rho_; }

 private:
  void require_level(int t) const {
    if (t < 1 || t > levels()) throw std::invalid_argument("fidelity level out of range");
  }

  std::vector<GpModel> gps_;
  std::vector<double> rho_;
};

/// Fits the recursive model bottom-up. At each level t >= 2 the scale rho and
/// the residual GP hyperparameters are optimized jointly by maximum
/// likelihood on targets c^t - rho * mean_{t-1}(X^t). When warm is given each
/// level starts from its previous optimum plus one fresh draw.
inline MultiFidelityModel fit_recursive(const std::vector<Matrix>& X,
                                        const std::vector<Vector>& y,
                                        const FitConfig& cfg = {},
                                        const MultiFidelityModel* warm = nullptr) {
  if (X.empty() || X.size() != y.size())
    throw std::invalid_argument("need matching design/target lists");
  const int s = static_cast<int>(X.size());
  for (int t = 0; t < s; ++t) {
    if (X[t].rows() < 2)
      throw std::invalid_argument("level " + std::to_string(t + 1) +
                                  " needs at least 2 observations");
    if (y[t].size() != X[t].rows())
      throw std::invalid_argument("level " + std::to_string(t + 1) +
                                  " target count mismatch");
    if (X[t].cols() != X[0].cols())
      throw std::invalid_argument("levels disagree on input dimension");
  }
  const auto violations = check_nesting(X);
  if (!violations.empty()) {
    std::string msg = "nesting violated:";
    for (const auto& v : violations)
      msg += " level " + std::to_string(v.level) + " row " + std::to_string(v.row) + ";";
    throw data_error(msg);
  }
  if (warm && warm->levels() != s)
    throw std::invalid_argument("warm-start model has a different level count");

  const int d = static_cast<int>(X[0].cols());
  std::vector<GpModel> gps;
  std::vector<double> rho;
  gps.reserve(static_cast<std::size_t>(s));

  const GpHyperparameters* warm1 = warm ? &warm->level(1).hyperparameters() : nullptr;
  gps.push_back(fit_gp(X[0], y[0], cfg, warm1));

  for (int t = 2; t <= s; ++t) {
    MultiFidelityModel partial(gps, rho);
    const Matrix& Xt = X[static_cast<std::size_t>(t - 1)];
    const Vector& yt = y[static_cast<std::size_t>(t - 1)];
    const int nt = static_cast<int>(Xt.rows());
    Vector prev_mean(nt);
    for (int i = 0; i < nt; ++i)
      prev_mean[i] = partial.predict_level(Xt.row(i).transpose(), t - 1).mean;

    // least-squares regression of y on [1, prev_mean] seeds (mean, rho)
    double rho0 = 1.0, mu0 = 0.0;
    {
      const double sm = prev_mean.mean(), sy = yt.mean();
      const double smm = (prev_mean.array() - sm).square().sum();
      if (smm > 1e-12) {
        rho0 = (prev_mean.array() - sm).matrix().dot(yt) / smm;
        mu0 = sy - rho0 * sm;
      }
    }

    Matrix theta_starts;
    Vector rho_starts;
    const Vector resid0 = yt - rho0 * prev_mean;
    if (warm) {
      theta_starts.resize(2, d + 3);
      theta_starts.row(0) = pack_hyperparameters(warm->level(t).hyperparameters()).transpose();
      theta_starts.row(1) = detail::fit_starts(1, d, resid0, cfg, cfg.seed + t).row(0);
      rho_starts.resize(2);
      rho_starts[0] = warm->rho(t - 1);
      rho_starts[1] = rho0;
    } else {
      theta_starts = detail::fit_starts(cfg.restarts, d, resid0, cfg, cfg.seed + t);
      theta_starts(0, 0) = mu0;
      rho_starts.resize(cfg.restarts);
      std::mt19937_64 rng(cfg.seed + 7919 * static_cast<std::uint64_t>(t));
      std::uniform_real_distribution<double> spread(-2.0, 2.0);
      rho_starts[0] = rho0;
      // fixed identity and decoupled starts guard against a badly biased
      // regression seed dragging every random start into the wrong basin
      if (cfg.restarts > 1) rho_starts[1] = 1.0;
      if (cfg.restarts > 2) rho_starts[2] = 0.0;
      for (int r = 3; r < cfg.restarts; ++r) rho_starts[r] = rho0 + spread(rng);
    }

    // likelihood over [theta_t, rho]; d/drho = prev_mean' alpha; the theta
    // block respects the same closed box edges as fit_gp (widened to contain
    // every start), rho stays free
    Vector theta_lo, theta_hi;
    detail::packed_bounds(d, detail::target_variance(resid0), cfg, theta_lo, theta_hi);
    for (int r = 0; r < theta_starts.rows(); ++r) {
      theta_lo = theta_lo.cwiseMin(theta_starts.row(r).transpose());
      theta_hi = theta_hi.cwiseMax(theta_starts.row(r).transpose());
    }
    auto objective = [&Xt, &yt, &prev_mean, d, theta_lo, theta_hi](const Vector& u,
                                                                   Vector& grad) {
      Vector uc = u;
      uc.head(d + 3) = uc.head(d + 3).cwiseMax(theta_lo).cwiseMin(theta_hi);
      const GpHyperparameters hp = unpack_hyperparameters(uc.head(d + 3), d);
      const double rho_u = uc[d + 3];
      const Vector resid = yt - rho_u * prev_mean;
      Vector g_theta, alpha;
      const double value = log_marginal_likelihood(Xt, resid, hp, &g_theta, &alpha);
      grad.resize(d + 4);
      grad.head(d + 3) = g_theta;
      grad[d + 3] = prev_mean.dot(alpha);
      for (int k = 0; k < d + 3; ++k)
        if (u[k] != uc[k]) grad[k] = 0.0;
      return value;
    };

    Vector best_u;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < theta_starts.rows(); ++r) {
      Vector u0(d + 4);
      u0.head(d + 3) = theta_starts.row(r).transpose();
      u0[d + 3] = rho_starts[r];
      maximize_bfgs(objective, u0, cfg.max_iterations, cfg.gradient_tolerance, best_u,
                    best_value);
    }
    if (!std::isfinite(best_value))
      throw numerical_error("all starts failed at level " + std::to_string(t));

    best_u.head(d + 3) = best_u.head(d + 3).cwiseMax(theta_lo).cwiseMin(theta_hi);
    const GpHyperparameters hp = unpack_hyperparameters(best_u.head(d + 3), d);
    const double rho_t = best_u[d + 3];
    gps.emplace_back(Xt, Vector(yt - rho_t * prev_mean), hp);
    rho.push_back(rho_t);
  }
  return MultiFidelityModel(std::move(gps), std::move(rho));
}

}  // namespace mfk

#endif
