#include "qpar/dispersion1d.hpp"

#include <cmath>

namespace qpar {

using cplx = std::complex<double>;

double LayeredProfile1D::length() const noexcept {
  double l = 0.0;
  for (const auto& layer : layers) l += layer.thickness;
  return l;
}

std::pair<cplx, cplx> propagate_1d(const LayeredProfile1D& profile, cplx omega) {
  cplx y = 0.0, dy = 1.0;
  for (const auto& layer : profile.layers) {
    const cplx k = omega * std::sqrt(layer.eps);
    const cplx x = k * layer.thickness;
    const cplx c = std::cos(x);
    // sin(x)/k and k sin(x) are even in k, so the branch of the root is irrelevant.
    cplx sk, ks;
    if (std::abs(x) < 1e-4) {
      const cplx x2 = x * x;
      sk = layer.thickness * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
      ks = k * x * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
    } else {
      const cplx s = std::sin(x);
      sk = s / k;
      ks = k * s;
    }
    const cplx ny = c * y + sk * dy;
    const cplx ndy = -ks * y + c * dy;
    y = ny;
    dy = ndy;
  }
  return {y, dy};
}

cplx dispersion_1d(const LayeredProfile1D& profile, cplx omega) {
  const auto [y, dy] = propagate_1d(profile, omega);
  return dy - cplx(0.0, 1.0) * omega * profile.gamma * y;
}

LayeredProfile1D profile_from_scene(const MaterialScene& scene) {
  const Grid& g = scene.grid();
  auto kind = [&](int axis, bool high) { return scene.side(side_index(axis, high)).kind; };
  if (kind(0, false) != BoundaryKind::MagneticWall || kind(0, true) != BoundaryKind::MagneticWall ||
      kind(1, false) != BoundaryKind::Reflecting || kind(1, true) != BoundaryKind::Reflecting ||
      kind(2, false) != BoundaryKind::Reflecting || kind(2, true) != BoundaryKind::Impedance)
    throw Error("scene does not reduce to a layered TEM profile: boundary types");
  const auto& zs = scene.side(side_index(2, true)).impedance;
  for (double z : zs)
    if (z != zs.front()) throw Error("scene does not reduce to a layered TEM profile: impedance");

  LayeredProfile1D prof;
  prof.gamma = 1.0 / zs.front();
  for (int k = 0; k < g.dim(2); ++k) {
    const double e = scene.eps()[g.cell_index(0, 0, k)];
    for (int i = 0; i < g.dim(0); ++i)
      for (int j = 0; j < g.dim(1); ++j) {
        const std::size_t c = g.cell_index(i, j, k);
        if (scene.eps()[c] != e || scene.sigma()[c] != 0.0)
          throw Error("scene does not reduce to a layered TEM profile: layer not uniform");
      }
    prof.layers.push_back({g.spacing(2), e});
  }
  return prof;
}

}  // namespace qpar
