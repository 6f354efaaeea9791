#ifndef MFKRIG_SCALING_HPP
#define MFKRIG_SCALING_HPP

#include <utility>
#include <vector>

#include "mfkrig/common.hpp"

namespace mfk {

/// Componentwise affine map between a physical box and the unit cube.
class InputScaler {
 public:
  InputScaler() = default;

  explicit InputScaler(std::vector<std::pair<double, double>> ranges)
      : ranges_(std::move(ranges)) {
    for (const auto& [lo, hi] : ranges_)
      if (!(lo < hi)) throw config_error("scaling range is degenerate (min >= max)");
  }

  int dim() const { return static_cast<int>(ranges_.size()); }

  const std::vector<std::pair<double, double>>& ranges() const { return ranges_; }

  Vector scale(const Vector& x) const {
    check(x);
    Vector out(x.size());
    for (int k = 0; k < x.size(); ++k)
      out[k] = (x[k] - ranges_[k].first) / (ranges_[k].second - ranges_[k].first);
    return out;
  }

  Vector unscale(const Vector& u) const {
    check(u);
    Vector out(u.size());
    for (int k = 0; k < u.size(); ++k)
      out[k] = ranges_[k].first + u[k] * (ranges_[k].second - ranges_[k].first);
    return out;
  }

  /// Restriction of the map to a subset of components.
  InputScaler subset(const std::vector<int>& indices) const {
    std::vector<std::pair<double, double>> sub;
    sub.reserve(indices.size());
    for (int k : indices) {
      if (k < 0 || k >= dim()) throw std::invalid_argument("scaler subset index out of range");
      sub.push_back(ranges_[static_cast<std::size_t>(k)]);
    }
    return InputScaler(std::move(sub));
  }

 private:
  void check(const Vector& v) const {
    if (v.size() != dim())
      throw std::invalid_argument("vector dimension does not match scaler");
  }

  std::vector<std::pair<double, double>> ranges_;
};

}  // namespace mfk

#endif
