#ifndef MFKRIG_GEOMETRY_HPP
#define MFKRIG_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <string>

#include "mfkrig/common.hpp"

namespace mfk {

/// Above-water geometry of one ship in one loading condition. SI units.
struct ShipGeometry {
  double loa = 0.0;                 // length overall L_OA [m]
  double beam = 0.0;                // beam B [m]
  double lateral_area = 0.0;        // projected lateral area A_L [m^2]
  double transverse_area = 0.0;     // projected transverse area A_T [m^2]
  double lateral_perimeter = 0.0;   // perimeter of the lateral projection S [m]
  double centroid_from_bow = 0.0;   // centroid of A_L from the bow C [m]
  double superstructure_area = 0.0; // lateral area of deck cargo / superstructure A_SS [m^2]
  double container_groups = 0.0;    // count of distinct cargo groups M

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(loa, "loa");
    positive(beam, "beam");
    positive(lateral_area, "lateral_area");
    positive(transverse_area, "transverse_area");
    positive(lateral_perimeter, "lateral_perimeter");
    positive(centroid_from_bow, "centroid_from_bow");
    if (superstructure_area < 0.0)
      throw std::invalid_argument("superstructure_area must be nonnegative");
    if (superstructure_area > lateral_area)
      throw std::invalid_argument("superstructure_area cannot exceed lateral_area");
    if (centroid_from_bow > loa)
      throw std::invalid_argument("centroid_from_bow cannot exceed loa");
    if (container_groups < 0.0 ||
        std::abs(container_groups - std::round(container_groups)) > 1e-9)
      throw std::invalid_argument("container_groups must be a nonnegative integer");
  }
};

/// Index layout of the correlation input vector
/// [A_L/L^2, C/L, A_T/B^2, L/B, S/L, M, A_SS/A_L, phi].
enum InputIndex : int {
  kIdxAlLoa2 = 0,
  kIdxCLoa = 1,
  kIdxAtB2 = 2,
  kIdxLoaB = 3,
  kIdxSLoa = 4,
  kIdxM = 5,
  kIdxAssAl = 6,
  kIdxPhi = 7,
};

inline constexpr int kInputDim = 8;

inline const std::array<std::string, kInputDim>& input_names() {
  static const std::array<std::string, kInputDim> names = {
      "AL_LOA2", "C_LOA", "AT_B2", "LOA_B", "S_LOA", "M", "ASS_AL", "phi"};
  return names;
}

/// Unscaled input vector for geometry g at apparent wind angle phi [deg].
inline Vector input_vector(const ShipGeometry& g, double phi_deg) {
  g.validate();
  Vector x(kInputDim);
  x[kIdxAlLoa2] = g.lateral_area / (g.loa * g.loa);
  x[kIdxCLoa] = g.centroid_from_bow / g.loa;
  x[kIdxAtB2] = g.transverse_area / (g.beam * g.beam);
  x[kIdxLoaB] = g.loa / g.beam;
  x[kIdxSLoa] = g.lateral_perimeter / g.loa;
  x[kIdxM] = g.container_groups;
  x[kIdxAssAl] = g.superstructure_area / g.lateral_area;
  x[kIdxPhi] = phi_deg;
  return x;
}

struct LoadCoefficients {
  double c_x = 0.0;
  double c_y = 0.0;
  double c_m = 0.0;
};

/// Normalizes measured loads into dimensionless coefficients:
///   c_x = f_x / (q A_T),  c_y = f_y / (q A_L),  c_m = m_z / (q A_L L_OA),
/// with q = 0.5 rho u^2.
inline LoadCoefficients coefficients_from_forces(double f_x, double f_y, double m_z,
                                                 double rho_air, double wind_speed,
                                                 const ShipGeometry& g) {
  g.validate();
  if (!(rho_air > 0.0)) throw std::invalid_argument("rho_air must be positive");
  if (!(wind_speed > 0.0)) throw std::invalid_argument("wind_speed must be positive");
  const double q = 0.5 * rho_air * wind_speed * wind_speed;
  LoadCoefficients c;
  c.c_x = f_x / (q * g.transverse_area);
  c.c_y = f_y / (q * g.lateral_area);
  c.c_m = m_z / (q * g.lateral_area * g.loa);
  return c;
}

}  // namespace mfk

#endif
