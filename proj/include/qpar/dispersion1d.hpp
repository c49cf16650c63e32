#pragma once

#include <complex>
#include <vector>

#include "qpar/medium.hpp"

namespace qpar {

struct Layer {
  double thickness;
  double eps;
};

/// Layered slab with y(0) = 0 on the left and impedance parameter gamma = 1/Z
/// on the right.
struct LayeredProfile1D {
  std::vector<Layer> layers;
  double gamma = 1.0;

  double length() const noexcept;
};

/// f(omega) = y'(L) - i omega gamma y(L) with y(0) = 0, y'(0) = 1. Zeros are the
/// TEM eigenfrequencies.
std::complex<double> dispersion_1d(const LayeredProfile1D& profile, std::complex<double> omega);

/// (y, y') at the right end.
std::pair<std::complex<double>, std::complex<double>> propagate_1d(
    const LayeredProfile1D& profile, std::complex<double> omega);

/// Profile seen by the TEM mode of a scene that reduces to one dimension
/// (reflecting wall at x3 = 0, impedance at the x3 top, symmetry walls across).
LayeredProfile1D profile_from_scene(const MaterialScene& scene);

}  // namespace qpar
