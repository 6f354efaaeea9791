#ifndef MFKRIG_BENCHMARKS_HPP
#define MFKRIG_BENCHMARKS_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "mfkrig/common.hpp"

namespace mfk {

/// Two-level analytic test problem on the unit box.
struct SyntheticBenchmark {
  std::string name;
  int dim = 1;
  std::function<double(const Vector&)> low;
  std::function<double(const Vector&)> high;
  double cost_low = 1.0;
  double cost_high = 10.0;
};

/// Named two-level problems:
///  - linear-coupled:     high = 2 low + small smooth residual
///  - independent-levels: low carries no information about high
///  - forrester-like:     low is a shifted and scaled copy of high
///  - ridge:              both levels constant along all but one direction
inline SyntheticBenchmark make_benchmark(const std::string& name, std::uint64_t seed,
                                         int dim = 1) {
  using std::numbers::pi;
  if (dim < 1) throw std::invalid_argument("benchmark dimension must be positive");
  SyntheticBenchmark b;
  b.name = name;
  b.dim = dim;

  if (name == "linear-coupled") {
    b.low = [](const Vector& x) { return std::sin(2.0 * pi * x[0]); };
    b.high = [](const Vector& x) {
      return 2.0 * std::sin(2.0 * pi * x[0]) + 0.05 * std::cos(6.0 * pi * x[0]);
    };
  } else if (name == "independent-levels") {
    b.low = [](const Vector& x) { return std::sin(2.0 * pi * x[0]); };
    b.high = [](const Vector& x) { return std::cos(3.0 * pi * x[0]); };
  } else if (name == "forrester-like") {
    auto hf = [](const Vector& x) {
      const double t = 6.0 * x[0] - 2.0;
      return t * t * std::sin(12.0 * x[0] - 4.0);
    };
    b.high = hf;
    b.low = [hf](const Vector& x) { return 0.5 * hf(x) + 10.0 * (x[0] - 0.5) - 5.0; };
  } else if (name == "ridge") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector w(dim);
    for (int m = 0; m < dim; ++m) w[m] = gauss(rng);
    w.normalize();
    if (w[0] < 0.0) w = -w;
    auto g = [w](const Vector& x) { return std::sin(pi * w.dot(x)); };
    b.low = [g](const Vector& x) { return 0.8 * g(x); };
    b.high = g;
    b.cost_high = 5.0;
  } else {
    throw std::invalid_argument("unknown benchmark '" + name + "'");
  }
  return b;
}

/// Unit direction of the ridge benchmark for a given seed and dimension.
inline Vector ridge_direction(std::uint64_t seed, int dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector w(dim);
  for (int m = 0; m < dim; ++m) w[m] = gauss(rng);
  w.normalize();
  if (w[0] < 0.0) w = -w;
  return w;
}

}  // namespace mfk

#endif
