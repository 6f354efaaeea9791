#ifndef MFKRIG_ISHERWOOD_HPP
#define MFKRIG_ISHERWOOD_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "mfkrig/common.hpp"
#include "mfkrig/geometry.hpp"

namespace mfk {

/// One interpolation row of the empirical regression tables.
struct CoefficientRow {
  std::array<double, 7> a{};  // longitudinal force: intercept + 6 regressors
  std::array<double, 7> b{};  // side force: intercept + 6 regressors
  std::array<double, 6> d{};  // yaw moment: intercept + 5 regressors
};

/// Tabulated regression coefficients on an increasing angle grid [deg],
/// plus the validity bounds of the eight input components.
struct CoefficientTable {
  std::vector<double> angles;
  std::vector<CoefficientRow> rows;
  std::array<std::pair<double, double>, kInputDim> ranges{};

  void validate() const {
    if (angles.size() != rows.size())
      throw data_error("coefficient table: angle/row count mismatch");
    if (angles.size() < 2) throw data_error("coefficient table: need at least 2 rows");
    for (std::size_t i = 0; i + 1 < angles.size(); ++i)
      if (!(angles[i] < angles[i + 1]))
        throw data_error("coefficient table: angles must be strictly increasing");
    if (angles.front() != 0.0 || angles.back() != 180.0)
      throw data_error("coefficient table: angle grid must span [0, 180]");
    for (int k = 0; k < kInputDim; ++k)
      if (!(ranges[k].first < ranges[k].second))
        throw config_error("range for " + input_names()[k] + " is degenerate");
  }

  CoefficientRow interpolate(double phi_deg) const {
    if (phi_deg < angles.front() || phi_deg > angles.back())
      throw std::invalid_argument("phi outside [0, 180]");
    auto hi = std::lower_bound(angles.begin(), angles.end(), phi_deg);
    if (hi == angles.begin()) return rows.front();
    std::size_t j = static_cast<std::size_t>(hi - angles.begin());
    if (j == angles.size()) return rows.back();
    if (angles[j] == phi_deg) return rows[j];
    std::size_t i = j - 1;
    const double w = (phi_deg - angles[i]) / (angles[j] - angles[i]);
    CoefficientRow out;
    for (int k = 0; k < 7; ++k) {
      out.a[k] = (1.0 - w) * rows[i].a[k] + w * rows[j].a[k];
      out.b[k] = (1.0 - w) * rows[i].b[k] + w * rows[j].b[k];
    }
    for (int k = 0; k < 6; ++k) out.d[k] = (1.0 - w) * rows[i].d[k] + w * rows[j].d[k];
    return out;
  }
};

/// Names of the input components that fall outside the table's validity
/// bounds. Callers decide whether to warn; evaluation extrapolates regardless.
inline std::vector<std::string> out_of_range_components(const Vector& x,
                                                        const CoefficientTable& table) {
  std::vector<std::string> out;
  for (int k = 0; k < kInputDim; ++k)
    if (x[k] < table.ranges[k].first || x[k] > table.ranges[k].second)
      out.push_back(input_names()[k]);
  return out;
}

/// Empirical wind-load coefficients for an unscaled input vector
/// [A_L/L^2, C/L, A_T/B^2, L/B, S/L, M, A_SS/A_L, phi].
inline LoadCoefficients isherwood_from_input(const Vector& x, const CoefficientTable& table) {
  if (x.size() != kInputDim) throw std::invalid_argument("input vector must have 8 components");
  const CoefficientRow r = table.interpolate(x[kIdxPhi]);
  LoadCoefficients c;
  const double al2 = 2.0 * x[kIdxAlLoa2];
  c.c_x = r.a[0] + r.a[1] * al2 + r.a[2] * x[kIdxAtB2] + r.a[3] * x[kIdxLoaB] +
          r.a[4] * x[kIdxSLoa] + r.a[5] * x[kIdxCLoa] + r.a[6] * x[kIdxM];
  c.c_y = r.b[0] + r.b[1] * al2 + r.b[2] * x[kIdxAtB2] + r.b[3] * x[kIdxLoaB] +
          r.b[4] * x[kIdxSLoa] + r.b[5] * x[kIdxCLoa] + r.b[6] * x[kIdxAssAl];
  c.c_m = r.d[0] + r.d[1] * al2 + r.d[2] * x[kIdxAtB2] + r.d[3] * x[kIdxLoaB] +
          r.d[4] * x[kIdxSLoa] + r.d[5] * x[kIdxCLoa];
  return c;
}

inline LoadCoefficients isherwood_coefficients(const ShipGeometry& g, double phi_deg,
                                               const CoefficientTable& table) {
  return isherwood_from_input(input_vector(g, phi_deg), table);
}

}  // namespace mfk

#endif
