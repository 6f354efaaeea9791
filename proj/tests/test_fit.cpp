#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "mfkrig/fit.hpp"

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

mfk::Vector apply(const mfk::Matrix& X, double (*f)(double)) {
  mfk::Vector y(X.rows());
  for (int i = 0; i < X.rows(); ++i) y[i] = f(X(i, 0));
  return y;
}

double sine(double x) { return std::sin(kTau * x); }

}  // namespace

TEST_CASE("maximizer never returns a value below its start") {
  auto f = [](const mfk::Vector& u, mfk::Vector& g) {
    g.resize(1);
    g[0] = -2.0 * u[0];
    return -u[0] * u[0];
  };
  mfk::Vector best;
  double value = -std::numeric_limits<double>::infinity();
  mfk::Vector x0(1);
  x0 << 3.0;
  mfk::maximize_bfgs(f, x0, 50, 1e-8, best, value);
  CHECK(value >= -9.0);             // never worse than the start
  CHECK(value == Catch::Approx(0.0).margin(1e-6));
  CHECK(best[0] == Catch::Approx(0.0).margin(1e-3));
}

TEST_CASE("maximizer survives objectives that throw") {
  auto f = [](const mfk::Vector& u, mfk::Vector& g) {
    if (u[0] < 0.0) throw std::runtime_error("out of domain");
    g.resize(1);
    g[0] = 1.0 - 2.0 * u[0];
    return u[0] - u[0] * u[0];
  };
  mfk::Vector best;
  double value = -std::numeric_limits<double>::infinity();
  mfk::Vector x0(1);
  x0 << 0.9;
  mfk::maximize_bfgs(f, x0, 50, 1e-8, best, value);
  CHECK(std::isfinite(value));
  CHECK(value >= 0.9 - 0.81 - 1e-12);
}

TEST_CASE("fitted surrogate recovers a smooth function") {
  const mfk::Matrix X = mfk::latin_hypercube(25, 1, 3);
  const mfk::Vector y = apply(X, sine);
  mfk::FitConfig cfg;
  cfg.seed = 1;
  const mfk::GpModel gp = mfk::fit_gp(X, y, cfg);

  double rmse = 0.0;
  for (int i = 0; i < 60; ++i) {
    mfk::Vector x(1);
    x << i / 59.0;
    const double err = gp.predict(x).mean - sine(x[0]);
    rmse += err * err;
  }
  rmse = std::sqrt(rmse / 60.0);
  CHECK(rmse < 0.02);
}

TEST_CASE("fit result is at least as likely as the plain default start") {
  const mfk::Matrix X = mfk::latin_hypercube(18, 2, 9);
  mfk::Vector y(18);
  for (int i = 0; i < 18; ++i) y[i] = std::sin(3.0 * X(i, 0)) + X(i, 1) * X(i, 1);
  mfk::FitConfig cfg;
  cfg.seed = 2;
  const mfk::GpModel gp = mfk::fit_gp(X, y, cfg);

  mfk::GpHyperparameters def;
  def.mean = y.mean();
  const double vy = std::max((y.array() - y.mean()).square().mean(), 1e-12);
  def.signal2 = vy;
  def.length = mfk::Vector::Ones(2);
  def.nugget2 = std::max(1e-6 * vy, cfg.nugget2_lo);
  CHECK(gp.log_marginal() >= mfk::log_marginal_likelihood(X, y, def) - 1e-9);
}

TEST_CASE("more restarts never lower the achieved likelihood") {
  const mfk::Matrix X = mfk::latin_hypercube(20, 1, 21);
  const mfk::Vector y = apply(X, sine);
  mfk::FitConfig one;
  one.restarts = 1;
  one.seed = 5;
  mfk::FitConfig many;
  many.restarts = 8;
  many.seed = 5;
  const double l1 = mfk::fit_gp(X, y, one).log_marginal();
  const double l8 = mfk::fit_gp(X, y, many).log_marginal();
  CHECK(l8 >= l1 - 1e-9);
}

TEST_CASE("fits are deterministic for a fixed seed") {
  const mfk::Matrix X = mfk::latin_hypercube(15, 2, 33);
  mfk::Vector y(15);
  for (int i = 0; i < 15; ++i) y[i] = X(i, 0) + std::cos(4.0 * X(i, 1));
  mfk::FitConfig cfg;
  cfg.seed = 77;
  const auto a = mfk::fit_gp(X, y, cfg).hyperparameters();
  const auto b = mfk::fit_gp(X, y, cfg).hyperparameters();
  CHECK(a.mean == b.mean);
  CHECK(a.signal2 == b.signal2);
  CHECK(a.nugget2 == b.nugget2);
  CHECK((a.length - b.length).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noisy targets produce a matching nugget") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  const mfk::Matrix X = mfk::latin_hypercube(60, 1, 8);
  mfk::Vector y(60);
  for (int i = 0; i < 60; ++i) y[i] = sine(X(i, 0)) + noise(rng);
  mfk::FitConfig cfg;
  cfg.seed = 3;
  const mfk::GpModel gp = mfk::fit_gp(X, y, cfg);
  CHECK(gp.hyperparameters().nugget2 > 1e-4);
  CHECK(gp.hyperparameters().nugget2 < 1e-1);
}

TEST_CASE("warm refits accept grown designs") {
  const mfk::Matrix X = mfk::latin_hypercube(16, 1, 12);
  const mfk::Vector y = apply(X, sine);
  mfk::FitConfig cfg;
  cfg.seed = 6;
  const mfk::GpModel first = mfk::fit_gp(X, y, cfg);

  mfk::Matrix X2(20, 1);
  X2.topRows(16) = X;
  X2.bottomRows(4) = mfk::uniform_box(4, 1, 99);
  mfk::Vector y2(20);
  y2.head(16) = y;
  for (int i = 16; i < 20; ++i) y2[i] = sine(X2(i, 0));
  const auto& warm = first.hyperparameters();
  const mfk::GpModel second = mfk::fit_gp(X2, y2, cfg, &warm);
  CHECK(second.size() == 20);
  CHECK(std::isfinite(second.log_marginal()));
  CHECK(second.log_marginal() >= mfk::log_marginal_likelihood(X2, y2, warm) - 1e-9);
}

TEST_CASE("fit input validation") {
  mfk::Matrix X(1, 1);
  X << 0.5;
  mfk::Vector y(1);
  y << 1.0;
  CHECK_THROWS_AS(mfk::fit_gp(X, y), std::invalid_argument);

  mfk::Matrix X2(3, 1);
  X2 << 0.1, 0.5, 0.9;
  mfk::Vector y3(3);
  y3 << 1.0, 2.0, 3.0;
  mfk::FitConfig bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(mfk::fit_gp(X2, y3, bad), std::invalid_argument);
  mfk::Vector y2(2);
  y2 << 1.0, 2.0;
  CHECK_THROWS_AS(mfk::fit_gp(X2, y2), std::invalid_argument);
}
