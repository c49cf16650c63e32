#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "qpar/dispersion1d.hpp"
#include "qpar/medium.hpp"

namespace qpar {

inline constexpr double kEpsAir = 1.0;
inline constexpr double kEpsSilicon = 11.9716;

/// Layered slab realised as a thin 3D scene: N cubic cells along x3, T x T
/// across, symmetry walls across, reflecting wall at x3 = 0 and impedance
/// Z = 1/gamma at x3 = L. Every layer but the top one is optimizable.
struct SlabParams {
  int cells = 64;
  int transverse = 2;
  double length = 1.0;
  double eps = 1.0;       ///< initial permittivity of every layer
  double eps_top = -1.0;  ///< permittivity of the fixed top layer; negative means eps
  double gamma = 3.0;
  double eps_minus = kEpsAir;
  double eps_plus = kEpsSilicon;
};
MaterialScene make_slab(const SlabParams& p);

/// Box with an optimizable central block.
struct BoxParams {
  int n = 16;
  std::array<double, 3> size{1.0, 0.9, 0.8};
  BoundaryKind walls = BoundaryKind::Impedance;
  double impedance = 2.0;
  double eps = 1.0;
  int opt_margin = 4;  ///< cells between the wall and the optimization block
  int shell = 0;       ///< absorbing shell thickness in cells
  double shell_sigma = 0.0;
  double eps_minus = kEpsAir;
  double eps_plus = kEpsSilicon;
};
MaterialScene make_box(const BoxParams& p);

/// Oracle value attached to a testbed, with provenance tag and recipe.
struct OracleValue {
  std::string name;
  std::complex<double> value;
  std::string provenance;  ///< "DERIVED" or "PUBLISHED"
  std::string recipe;
};

struct TestbedInfo {
  std::string name;
  std::string description;
  std::vector<OracleValue> oracles;
};

std::vector<TestbedInfo> testbed_catalog();

/// Named scene. Throws Error for unknown names.
MaterialScene build_scene(const std::string& name);

/// Named layered profile (only for the one-dimensional testbeds).
LayeredProfile1D build_profile(const std::string& name);

}  // namespace qpar
