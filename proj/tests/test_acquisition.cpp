#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <set>

#include "mfkrig/acquisition.hpp"
#include "mfkrig/benchmarks.hpp"
#include "mfkrig/io.hpp"

namespace {

mfk::ConfigurationCatalogue small_catalogue() {
  mfk::ConfigurationCatalogue cat;
  cat.labels = {"a", "b", "c"};
  cat.param_names = {"p", "q"};
  cat.values.resize(3, 2);
  cat.values << 0.2, 1.0, 0.5, 5.0, 0.9, 9.0;
  return cat;
}

mfk::InputScaler small_scaler() {
  return mfk::InputScaler({{0.0, 1.0}, {1.0, 9.0}, {0.0, 180.0}});
}

mfk::GpHyperparameters make_hp(double mean, double signal2, mfk::Vector length,
                               double nugget2) {
  mfk::GpHyperparameters hp;
  hp.mean = mean;
  hp.signal2 = signal2;
  hp.length = std::move(length);
  hp.nugget2 = nugget2;
  return hp;
}

mfk::MultiFidelityModel pinned_two_level() {
  mfk::Matrix X1(5, 2);
  X1 << 0.1, 0.15, 0.3, 0.5, 0.6, 0.25, 0.8, 0.7, 0.45, 0.9;
  mfk::Vector y1(5);
  y1 << 0.4, -0.3, 0.2, 0.5, -0.1;
  mfk::Matrix X2(3, 2);
  X2 << 0.3, 0.5, 0.8, 0.7, 0.45, 0.9;
  mfk::Vector r2(3);
  r2 << 0.05, -0.02, 0.08;
  const auto hp1 = make_hp(0.1, 1.4, mfk::Vector::Constant(2, 0.35), 1e-4);
  const auto hp2 = make_hp(0.0, 0.5, mfk::Vector::Constant(2, 0.55), 1e-5);
  return mfk::MultiFidelityModel({mfk::GpModel(X1, y1, hp1), mfk::GpModel(X2, r2, hp2)},
                                 {1.25});
}

// residual posterior variance at z from first principles, no jitter
double direct_variance(const mfk::GpModel& g, const mfk::Vector& z) {
  mfk::Matrix Ky = mfk::kernel_matrix(g.inputs(), g.hyperparameters());
  Ky.diagonal().array() += g.hyperparameters().nugget2;
  const mfk::Vector k = mfk::cross_kernel(g.inputs(), z, g.hyperparameters());
  return g.hyperparameters().signal2 - k.dot(Ky.fullPivLu().solve(k));
}

}  // namespace

TEST_CASE("pool draws catalogue rows with a continuous angle") {
  const auto cat = small_catalogue();
  const auto scaler = small_scaler();
  const auto pool = mfk::generate_pool(cat, scaler, 64, 3);

  REQUIRE(pool.size() == 64);
  REQUIRE(pool.Z.cols() == 3);
  REQUIRE(pool.config_index.size() == 64);
  REQUIRE(pool.feasible.size() == 64);
  REQUIRE(pool.used.size() == 64);

  for (int i = 0; i < pool.size(); ++i) {
    const int c = pool.config_index[static_cast<std::size_t>(i)];
    REQUIRE(c >= 0);
    REQUIRE(c < 3);
    const mfk::Vector raw = scaler.unscale(pool.Z.row(i).transpose());
    CHECK(std::abs(raw[0] - cat.values(c, 0)) <= 1e-12);
    CHECK(std::abs(raw[1] - cat.values(c, 1)) <= 1e-12);
    CHECK(raw[2] >= 0.0);
    CHECK(raw[2] <= 180.0);
    CHECK(pool.feasible[static_cast<std::size_t>(i)]);
    CHECK_FALSE(pool.used[static_cast<std::size_t>(i)]);
  }

  const auto again = mfk::generate_pool(cat, scaler, 64, 3);
  CHECK(pool.Z == again.Z);
  CHECK(pool.config_index == again.config_index);

  std::set<int> seen;
  const auto big = mfk::generate_pool(cat, scaler, 200, 4);
  for (int c : big.config_index) seen.insert(c);
  CHECK(seen.size() == 3);
}

TEST_CASE("pool flags configurations outside the box as infeasible") {
  auto cat = small_catalogue();
  cat.labels.push_back("d");
  cat.values.conservativeResize(4, Eigen::NoChange);
  cat.values.row(3) << 1.5, 5.0;  // p outside [0, 1]
  const auto pool = mfk::generate_pool(cat, small_scaler(), 400, 9);
  bool saw_bad = false, saw_good = false;
  for (int i = 0; i < pool.size(); ++i) {
    if (pool.config_index[static_cast<std::size_t>(i)] == 3) {
      CHECK_FALSE(pool.feasible[static_cast<std::size_t>(i)]);
      saw_bad = true;
    } else {
      CHECK(pool.feasible[static_cast<std::size_t>(i)]);
      saw_good = true;
    }
  }
  CHECK(saw_bad);
  CHECK(saw_good);
}

TEST_CASE("pool generation validates its inputs") {
  const auto cat = small_catalogue();
  CHECK_THROWS_AS(mfk::generate_pool(cat, mfk::InputScaler({{0.0, 1.0}, {1.0, 9.0}}), 10, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mfk::generate_pool(cat, small_scaler(), 0, 0), std::invalid_argument);

  auto bad = cat;
  bad.labels.pop_back();
  CHECK_THROWS_AS(mfk::generate_pool(bad, small_scaler(), 10, 0), mfk::data_error);
}

TEST_CASE("single-level variance reduction is the weighted posterior variance") {
  mfk::Matrix X(4, 2);
  X << 0.2, 0.3, 0.5, 0.6, 0.7, 0.2, 0.35, 0.8;
  mfk::Vector y(4);
  y << 0.1, -0.4, 0.3, 0.2;
  const auto hp = make_hp(0.0, 0.9, (mfk::Vector(2) << 0.3, 0.7).finished(), 0.0);
  const mfk::MultiFidelityModel model({mfk::GpModel(X, y, hp)}, {});

  mfk::Vector z(2);
  z << 0.42, 0.51;
  const double expect = model.level(1).predict(z).variance * 0.3 * 0.7;
  CHECK(std::abs(mfk::imse_reduction(model, z, 1) - expect) <= 1e-14);

  // nothing left to learn at a noise-free training point
  CHECK(mfk::imse_reduction(model, X.row(0).transpose(), 1) <= 1e-8);

  CHECK_THROWS_AS(mfk::imse_reduction(model, z, 0), std::invalid_argument);
  CHECK_THROWS_AS(mfk::imse_reduction(model, z, 2), std::invalid_argument);
}

TEST_CASE("two-level variance reduction matches the direct matrix computation") {
  const auto model = pinned_two_level();
  const double rho = model.rho(1);
  const double l1 = model.level(1).hyperparameters().length.prod();
  const double l2 = model.level(2).hyperparameters().length.prod();
  const mfk::Matrix probes = mfk::uniform_box(15, 2, 21);
  for (int i = 0; i < probes.rows(); ++i) {
    const mfk::Vector z = probes.row(i).transpose();
    const double v1 = direct_variance(model.level(1), z);
    const double v2 = direct_variance(model.level(2), z);
    const double expect2 = v1 * rho * rho * l1 + v2 * l2;
    const double got2 = mfk::imse_reduction(model, z, 2);
    CHECK(std::abs(got2 - expect2) <= 1e-10 * std::max(1.0, std::abs(expect2)));
    const double got1 = mfk::imse_reduction(model, z, 1);
    CHECK(std::abs(got1 - v1 * l1) <= 1e-10 * std::max(1.0, std::abs(v1 * l1)));
  }
}

TEST_CASE("scores divide by cumulative cost and aggregate over outputs") {
  const auto model = pinned_two_level();
  const std::vector<mfk::MultiFidelityModel> models = {model, model};
  mfk::Vector z(2);
  z << 0.33, 0.66;

  const auto s1 = mfk::score(models, z, 2, {1.0, 4.0});
  const auto s2 = mfk::score(models, z, 2, {2.0, 8.0});
  REQUIRE(s1.components.size() == 2);
  CHECK(s1.components[0] == s1.components[1]);
  CHECK(std::abs(s2.gamma - 0.5 * s1.gamma) <= 1e-14 * s1.gamma);
  CHECK(std::abs(s1.gamma - std::sqrt(2.0) * std::abs(s1.components[0])) <=
        1e-12 * s1.gamma);

  // level 1 ignores the level-2 cost
  const auto a = mfk::score(models, z, 1, {1.0, 4.0});
  const auto b = mfk::score(models, z, 1, {1.0, 400.0});
  CHECK(a.gamma == b.gamma);

  CHECK_THROWS_AS(mfk::score(models, z, 2, {1.0, -4.0}), std::invalid_argument);
  CHECK_THROWS_AS(mfk::score(models, z, 2, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(mfk::score({}, z, 1, {1.0}), std::invalid_argument);
}

TEST_CASE("selection is the exhaustive argmax with deterministic ties") {
  const auto model = pinned_two_level();
  const std::vector<mfk::MultiFidelityModel> models = {model};
  const std::vector<double> costs = {1.0, 4.0};

  mfk::CandidatePool pool;
  pool.Z = mfk::uniform_box(30, 2, 33);
  pool.config_index.assign(30, 0);
  pool.feasible.assign(30, true);
  pool.used.assign(30, false);
  pool.used[4] = true;
  pool.feasible[7] = false;

  const auto sel = mfk::select_next(models, pool, costs);
  REQUIRE(sel.has_value());
  CHECK(sel->pool_index != 4);
  CHECK(sel->pool_index != 7);

  double best = -1.0;
  int best_i = -1, best_t = 0;
  for (int i = 0; i < pool.size(); ++i) {
    if (i == 4 || i == 7) continue;
    for (int t = 1; t <= 2; ++t) {
      const double g = mfk::score(models, pool.Z.row(i).transpose(), t, costs).gamma;
      if (g > best) {
        best = g;
        best_i = i;
        best_t = t;
      }
    }
  }
  CHECK(sel->pool_index == best_i);
  CHECK(sel->level == best_t);
  CHECK(sel->best.gamma == best);

  // identical rows score identically; the first one wins
  mfk::CandidatePool dup;
  dup.Z.resize(3, 2);
  dup.Z << 0.11, 0.22, 0.11, 0.22, 0.11, 0.22;
  dup.config_index.assign(3, 0);
  dup.feasible.assign(3, true);
  dup.used.assign(3, false);
  const auto first = mfk::select_next(models, dup, costs);
  REQUIRE(first.has_value());
  CHECK(first->pool_index == 0);

  mfk::CandidatePool spent = dup;
  spent.used.assign(3, true);
  CHECK_FALSE(mfk::select_next(models, spent, costs).has_value());
}

namespace {

struct ForresterSetup {
  std::vector<mfk::LevelEvaluator> sources;
  std::vector<mfk::Matrix> X;
  std::vector<mfk::Matrix> Y;
  mfk::CandidatePool pool;
  std::vector<double> costs = {1.0, 5.0};
};

ForresterSetup forrester_setup() {
  ForresterSetup s;
  const auto bench = mfk::make_benchmark("forrester-like", 0);
  s.sources = {
      [bench](const mfk::Vector& z) { return mfk::Vector::Constant(1, bench.low(z)); },
      [bench](const mfk::Vector& z) { return mfk::Vector::Constant(1, bench.high(z)); }};
  s.pool.Z = mfk::uniform_box(60, 1, 9);
  s.pool.config_index.assign(60, 0);
  s.pool.feasible.assign(60, true);
  s.pool.used.assign(60, false);
  s.X = {s.pool.Z.topRows(8), s.pool.Z.topRows(4)};
  for (int i = 0; i < 8; ++i) s.pool.used[static_cast<std::size_t>(i)] = true;
  s.Y.resize(2);
  s.Y[0].resize(8, 1);
  s.Y[1].resize(4, 1);
  for (int i = 0; i < 8; ++i) s.Y[0](i, 0) = s.sources[0](s.X[0].row(i).transpose())[0];
  for (int i = 0; i < 4; ++i) s.Y[1](i, 0) = s.sources[1](s.X[1].row(i).transpose())[0];
  return s;
}

}  // namespace

TEST_CASE("an infinite threshold stops before the first acquisition") {
  auto s = forrester_setup();
  mfk::SequentialConfig cfg;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  cfg.max_iterations = 10;
  cfg.fit.restarts = 2;
  cfg.fit.seed = 3;
  const auto res = mfk::run_sequential(s.sources, s.X, s.Y, s.pool, s.costs, cfg);
  CHECK(res.log.empty());
  CHECK(res.total_cost == 0.0);
  CHECK(res.converged);
  CHECK(res.X[0] == s.X[0]);
  CHECK(res.X[1] == s.X[1]);
  REQUIRE(res.models.size() == 1);
  CHECK(res.models[0].levels() == 2);
}

TEST_CASE("sequential enrichment keeps designs nested and books costs") {
  auto s = forrester_setup();
  mfk::SequentialConfig cfg;
  cfg.epsilon = 1e-9;
  cfg.max_iterations = 6;
  cfg.fit.restarts = 3;
  cfg.fit.seed = 3;
  const auto res = mfk::run_sequential(s.sources, s.X, s.Y, s.pool, s.costs, cfg);

  REQUIRE(!res.log.empty());
  CHECK(res.log.size() <= 6);
  CHECK(mfk::check_nesting({res.X[0], res.X[1]}).empty());

  std::set<int> picked;
  double cost = 0.0;
  std::vector<int> sizes = {8, 4};
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    const auto& rec = res.log[i];
    CHECK(rec.iteration == static_cast<int>(i));
    CHECK(picked.insert(rec.pool_index).second);  // no pool point twice
    CHECK(rec.pool_index >= 8);                   // initial rows were marked used
    REQUIRE(rec.level >= 1);
    REQUIRE(rec.level <= 2);
    for (int t = 1; t <= rec.level; ++t) {
      cost += s.costs[static_cast<std::size_t>(t - 1)];
      ++sizes[static_cast<std::size_t>(t - 1)];
    }
    CHECK(rec.cumulative_cost == cost);
    REQUIRE(rec.sizes.size() == 2);
    CHECK(rec.sizes[0] == sizes[0]);
    CHECK(rec.sizes[1] == sizes[1]);
    CHECK(rec.z.size() == 1);
    CHECK((rec.z.transpose() - s.pool.Z.row(rec.pool_index)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rec.gamma > 0.0);
    CHECK(rec.gamma_components.size() == 1);
  }
  CHECK(res.total_cost == cost);
  CHECK(res.X[0].rows() == sizes[0]);
  CHECK(res.X[1].rows() == sizes[1]);
  CHECK(res.Y[0].rows() == sizes[0]);
  CHECK(res.converged == (res.log.back().stop_metric < cfg.epsilon));

  // appended target values come from the declared sources
  const int last = static_cast<int>(res.X[0].rows()) - 1;
  CHECK(res.Y[0](last, 0) == s.sources[0](res.X[0].row(last).transpose())[0]);
}

TEST_CASE("sequential runs are reproducible") {
  auto s1 = forrester_setup();
  auto s2 = forrester_setup();
  mfk::SequentialConfig cfg;
  cfg.epsilon = 1e-9;
  cfg.max_iterations = 4;
  cfg.fit.restarts = 3;
  cfg.fit.seed = 5;
  const auto a = mfk::run_sequential(s1.sources, s1.X, s1.Y, s1.pool, s1.costs, cfg);
  const auto b = mfk::run_sequential(s2.sources, s2.X, s2.Y, s2.pool, s2.costs, cfg);
  CHECK(mfk::training_log_lines(a.log) == mfk::training_log_lines(b.log));
  CHECK(a.X[0] == b.X[0]);
  CHECK(a.X[1] == b.X[1]);
}

TEST_CASE("an exhausted pool ends the loop unconverged") {
  auto s = forrester_setup();
  // leave only three unused candidates
  for (int i = 11; i < 60; ++i) s.pool.used[static_cast<std::size_t>(i)] = true;
  mfk::SequentialConfig cfg;
  cfg.epsilon = 0.0;
  cfg.max_iterations = 10;
  cfg.fit.restarts = 2;
  cfg.fit.seed = 1;
  const auto res = mfk::run_sequential(s.sources, s.X, s.Y, s.pool, s.costs, cfg);
  CHECK(res.log.size() <= 3);
  CHECK_FALSE(res.converged);
}

TEST_CASE("sequential loop validates shapes and sources") {
  auto s = forrester_setup();
  mfk::SequentialConfig cfg;
  cfg.epsilon = 1e-9;
  cfg.max_iterations = 1;
  cfg.fit.restarts = 2;

  CHECK_THROWS_AS(
      mfk::run_sequential({}, {}, {}, s.pool, {}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(
      mfk::run_sequential(s.sources, {s.X[0]}, s.Y, s.pool, s.costs, cfg),
      std::invalid_argument);
  CHECK_THROWS_AS(
      mfk::run_sequential(s.sources, s.X, s.Y, s.pool, {1.0}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(
      mfk::run_sequential(s.sources, s.X, s.Y, s.pool, {1.0, -5.0}, cfg),
      std::invalid_argument);

  auto bad = s;
  bad.sources[0] = [](const mfk::Vector&) { return mfk::Vector::Zero(2).eval(); };
  CHECK_THROWS_AS(mfk::run_sequential(bad.sources, bad.X, bad.Y, bad.pool, bad.costs, cfg),
                  mfk::data_error);
}
