#ifndef MFKRIG_COMMON_HPP
#define MFKRIG_COMMON_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed or inconsistent user configuration (bad ranges, missing fields, ...).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV schema, NaN cells, nesting violations, ...).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear-algebra failure that survived the jitter escalation, or an
/// out-of-tolerance negative variance.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Latin hypercube sample of n points in [0,1]^d, seeded.
inline Matrix latin_hypercube(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix out(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) out(i, j) = (perm[i] + unif(rng)) / n;
  }
  return out;
}

/// Uniform sample of n points in [0,1]^d, seeded.
inline Matrix uniform_box(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix out(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = unif(rng);
  return out;
}

}  // namespace mfk

#endif
