#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "mfkrig/gp.hpp"

namespace {

mfk::GpHyperparameters make_hp(double mean, double signal2, std::vector<double> length,
                               double nugget2) {
  mfk::GpHyperparameters hp;
  hp.mean = mean;
  hp.signal2 = signal2;
  hp.length = Eigen::Map<const mfk::Vector>(length.data(),
                                            static_cast<Eigen::Index>(length.size()));
  hp.nugget2 = nugget2;
  return hp;
}

}  // namespace

TEST_CASE("kernel closed form") {
  mfk::Vector a(2), b(2), l(2);
  a << 0.0, 0.0;
  b << 1.0, 2.0;
  l << 1.0, 2.0;
  // z = (1/1)^2 + (2/2)^2 = 2
  CHECK(mfk::kernel(a, b, 2.0, l) == Catch::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(mfk::kernel(a, a, 2.0, l) == 2.0);
  CHECK(mfk::kernel(a, b, 2.0, l) == mfk::kernel(b, a, 2.0, l));
  mfk::Vector bad(3);
  CHECK_THROWS_AS(mfk::kernel(a, bad, 1.0, l), std::invalid_argument);
}

TEST_CASE("kernel matrix is symmetric with signal variance diagonal") {
  const mfk::Matrix X = mfk::latin_hypercube(7, 3, 11);
  const auto hp = make_hp(0.0, 1.7, {0.5, 0.3, 0.9}, 0.0);
  const mfk::Matrix K = mfk::kernel_matrix(X, hp);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 7; ++i) CHECK(K(i, i) == 1.7);
  const mfk::Vector k = mfk::cross_kernel(X, X.row(2).transpose(), hp);
  CHECK((k - K.col(2)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("single-observation likelihood matches the closed form") {
  mfk::Matrix X(1, 1);
  X << 0.3;
  mfk::Vector y(1);
  y << 2.0;
  const auto hp = make_hp(1.0, 1.5, {1.0}, 0.5);
  // Ky = 2, r = 1: L = -1/2 log(4 pi) - 1/4
  const double expect = -1.5155121234846454;
  CHECK(mfk::log_marginal_likelihood(X, y, hp) == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("likelihood gradient agrees with finite differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  mfk::Matrix X(6, 2);
  mfk::Vector y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = unif(rng);
    X(i, 1) = unif(rng);
    y[i] = std::sin(3.0 * X(i, 0)) + 0.5 * X(i, 1);
  }
  const auto hp = make_hp(0.2, 0.8, {0.4, 0.7}, 1e-3);
  mfk::Vector grad;
  mfk::log_marginal_likelihood(X, y, hp, &grad);
  REQUIRE(grad.size() == 5);

  mfk::Vector u = mfk::pack_hyperparameters(hp);
  const double h = 1e-6;
  for (int i = 0; i < u.size(); ++i) {
    mfk::Vector up = u, dn = u;
    up[i] += h;
    dn[i] -= h;
    const double fp =
        mfk::log_marginal_likelihood(X, y, mfk::unpack_hyperparameters(up, 2));
    const double fm =
        mfk::log_marginal_likelihood(X, y, mfk::unpack_hyperparameters(dn, 2));
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(std::abs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("weight vector solves the regularized system") {
  const mfk::Matrix X = mfk::latin_hypercube(9, 2, 5);
  mfk::Vector y(9);
  for (int i = 0; i < 9; ++i) y[i] = X(i, 0) * X(i, 0) - X(i, 1);
  const auto hp = make_hp(0.1, 1.2, {0.5, 0.5}, 1e-4);
  mfk::Vector alpha;
  mfk::log_marginal_likelihood(X, y, hp, nullptr, &alpha);
  mfk::Matrix Ky = mfk::kernel_matrix(X, hp);
  Ky.diagonal().array() += hp.nugget2;
  const mfk::Vector r = y.array() - hp.mean;
  CHECK((Ky * alpha - r).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("noise-free posterior interpolates the training data") {
  const mfk::Matrix X = mfk::latin_hypercube(10, 2, 23);
  mfk::Vector y(10);
  for (int i = 0; i < 10; ++i) y[i] = std::cos(2.0 * X(i, 0)) + X(i, 1);
  const auto hp = make_hp(0.5, 1.0, {0.4, 0.4}, 0.0);
  const mfk::GpModel gp(X, y, hp);
  for (int i = 0; i < 10; ++i) {
    const auto p = gp.predict(X.row(i).transpose());
    CHECK(std::abs(p.mean - y[i]) <= 1e-7);
    CHECK(p.variance <= 1e-8);
    CHECK(p.variance >= 0.0);
  }
}

TEST_CASE("posterior reverts to the prior far from the data") {
  const mfk::Matrix X = mfk::latin_hypercube(8, 1, 2);
  mfk::Vector y(8);
  for (int i = 0; i < 8; ++i) y[i] = std::sin(6.0 * X(i, 0));
  const auto hp = make_hp(0.37, 1.9, {0.3}, 1e-4);
  const mfk::GpModel gp(X, y, hp);
  mfk::Vector far(1);
  far << 150.0;
  const auto p = gp.predict(far);
  CHECK(p.mean == Catch::Approx(0.37).margin(1e-10));
  CHECK(p.variance == Catch::Approx(1.9).margin(1e-10));
}

TEST_CASE("variance stays within the clamp everywhere") {
  const mfk::Matrix X = mfk::latin_hypercube(20, 2, 31);
  mfk::Vector y = mfk::Vector::LinSpaced(20, -1.0, 1.0);
  const auto hp = make_hp(0.0, 2.0, {0.2, 0.2}, 1e-6);
  const mfk::GpModel gp(X, y, hp);
  const mfk::Matrix probes = mfk::uniform_box(200, 2, 7);
  for (int i = 0; i < probes.rows(); ++i) {
    const auto p = gp.predict(probes.row(i).transpose());
    CHECK(p.variance >= 0.0);
    CHECK(p.variance <= hp.signal2 + hp.nugget2);
  }
}

TEST_CASE("predictions are invariant to training-row order") {
  const mfk::Matrix X = mfk::latin_hypercube(12, 2, 13);
  mfk::Vector y(12);
  for (int i = 0; i < 12; ++i) y[i] = X(i, 0) - 2.0 * X(i, 1);
  const auto hp = make_hp(0.0, 1.0, {0.5, 0.6}, 1e-5);
  const mfk::GpModel a(X, y, hp);

  std::vector<int> perm = {5, 2, 9, 0, 11, 7, 3, 1, 10, 4, 8, 6};
  mfk::Matrix Xp(12, 2);
  mfk::Vector yp(12);
  for (int i = 0; i < 12; ++i) {
    Xp.row(i) = X.row(perm[i]);
    yp[i] = y[perm[i]];
  }
  const mfk::GpModel b(Xp, yp, hp);

  const mfk::Matrix probes = mfk::uniform_box(30, 2, 97);
  for (int i = 0; i < probes.rows(); ++i) {
    const auto pa = a.predict(probes.row(i).transpose());
    const auto pb = b.predict(probes.row(i).transpose());
    CHECK(std::abs(pa.mean - pb.mean) <= 1e-10);
    CHECK(std::abs(pa.variance - pb.variance) <= 1e-10);
  }
}

TEST_CASE("extra observations never increase the posterior variance") {
  const mfk::Matrix X10 = mfk::latin_hypercube(10, 1, 41);
  const mfk::Matrix X5 = X10.topRows(5);
  mfk::Vector y10(10);
  for (int i = 0; i < 10; ++i) y10[i] = std::sin(4.0 * X10(i, 0));
  const auto hp = make_hp(0.0, 1.0, {0.3}, 1e-6);
  const mfk::GpModel big(X10, y10, hp);
  const mfk::GpModel small(X5, y10.head(5), hp);
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    mfk::Vector x(1);
    x << t;
    CHECK(big.predict(x).variance <= small.predict(x).variance + 1e-9);
  }
}

TEST_CASE("mean gradient agrees with finite differences") {
  const mfk::Matrix X = mfk::latin_hypercube(15, 2, 3);
  mfk::Vector y(15);
  for (int i = 0; i < 15; ++i) y[i] = std::sin(3.0 * X(i, 0)) * std::cos(2.0 * X(i, 1));
  const auto hp = make_hp(0.1, 1.0, {0.4, 0.5}, 1e-6);
  const mfk::GpModel gp(X, y, hp);
  mfk::Vector x(2);
  x << 0.42, 0.61;
  const mfk::Vector g = gp.predict_gradient(x);
  const double h = 1e-6;
  for (int m = 0; m < 2; ++m) {
    mfk::Vector up = x, dn = x;
    up[m] += h;
    dn[m] -= h;
    const double fd = (gp.predict(up).mean - gp.predict(dn).mean) / (2.0 * h);
    CHECK(std::abs(g[m] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("duplicate rows survive through jitter escalation") {
  mfk::Matrix X(4, 1);
  X << 0.2, 0.2, 0.7, 0.9;
  mfk::Vector y(4);
  y << 1.0, 1.0, -0.5, 0.3;
  const auto hp = make_hp(0.0, 1.0, {0.5}, 0.0);
  const mfk::GpModel gp(X, y, hp);  // singular without jitter
  CHECK(gp.jitter() > 0.0);
  mfk::Vector x(1);
  x << 0.5;
  CHECK(std::isfinite(gp.predict(x).mean));
}

TEST_CASE("non-finite covariance raises a numerical error") {
  mfk::Matrix X(2, 1);
  X << 0.1, std::numeric_limits<double>::quiet_NaN();
  mfk::Vector y(2);
  y << 1.0, 2.0;
  const auto hp = make_hp(0.0, 1.0, {0.5}, 0.0);
  CHECK_THROWS_AS(mfk::GpModel(X, y, hp), mfk::numerical_error);
}

TEST_CASE("pack and unpack are inverse maps") {
  const auto hp = make_hp(-0.3, 2.5, {0.7, 1.2, 0.05}, 1e-5);
  const auto back = mfk::unpack_hyperparameters(mfk::pack_hyperparameters(hp), 3);
  CHECK(back.mean == hp.mean);
  CHECK(back.signal2 == Catch::Approx(hp.signal2).epsilon(1e-15));
  CHECK((back.length - hp.length).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(back.nugget2 == Catch::Approx(hp.nugget2).epsilon(1e-12));
  CHECK_THROWS_AS(mfk::unpack_hyperparameters(mfk::Vector::Zero(5), 3),
                  std::invalid_argument);
}

TEST_CASE("hyperparameter validation") {
  auto hp = make_hp(0.0, 1.0, {0.5}, 0.0);
  CHECK_NOTHROW(hp.validate(1));
  CHECK_THROWS_AS(hp.validate(2), std::invalid_argument);
  hp.signal2 = 0.0;
  CHECK_THROWS_AS(hp.validate(1), std::invalid_argument);
  hp = make_hp(0.0, 1.0, {0.0}, 0.0);
  CHECK_THROWS_AS(hp.validate(1), std::invalid_argument);
  hp = make_hp(0.0, 1.0, {0.5}, -1e-9);
  CHECK_THROWS_AS(hp.validate(1), std::invalid_argument);
}
