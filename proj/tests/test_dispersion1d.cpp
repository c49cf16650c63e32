#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpar/eigensolve.hpp"
#include "qpar/testbeds.hpp"

using namespace qpar;
using std::numbers::pi;

namespace {

const LayeredProfile1D kUniform{{{1.0, 1.0}}, 3.0};

// Closed form for a single layer: y = sin(k x)/k with k = omega sqrt(eps).
cplx single_layer(double eps, double len, double gamma, cplx w) {
  const cplx k = w * std::sqrt(eps);
  return std::cos(k * len) - cplx(0.0, 1.0) * w * gamma * std::sin(k * len) / k;
}

}  // namespace

TEST_CASE("dispersion_1d matches the single-layer closed form") {
  for (cplx w : {cplx(0.7, -0.1), cplx(3.3, 0.2), cplx(10.0, -1.5)})
    CHECK(std::abs(dispersion_1d({{{1.0, 2.5}}, 0.4}, w) - single_layer(2.5, 1.0, 0.4, w)) <=
          1e-12 * (1.0 + std::abs(single_layer(2.5, 1.0, 0.4, w))));
}

TEST_CASE("splitting a layer does not change f") {
  const LayeredProfile1D split{{{0.25, 1.0}, {0.5, 1.0}, {0.25, 1.0}}, 3.0};
  const cplx w(2.1, -0.3);
  CHECK(std::abs(dispersion_1d(split, w) - dispersion_1d(kUniform, w)) <= 1e-13);
}

TEST_CASE("uniform slab zeros are pi k - i ln2 / 2") {
  for (int k = 1; k <= 3; ++k) {
    const cplx root(pi * k, -0.5 * std::log(2.0));
    CHECK(std::abs(dispersion_1d(kUniform, root)) <= 1e-12);
  }
}

TEST_CASE("roots_1d on the uniform slab returns exactly three roots") {
  const Rect r{0.5, 10.0, -2.0, 0.1};
  const auto roots = roots_1d(kUniform, r);
  REQUIRE(roots.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(roots[k].omega.real() == doctest::Approx(pi * (k + 1)).epsilon(1e-12));
    CHECK(roots[k].omega.imag() == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(roots[k].multiplicity == 1);
  }
  int total = 0;
  for (const auto& z : roots) total += z.multiplicity;
  CHECK(winding_number(kUniform, r) == total);
}

TEST_CASE("upper half-plane rectangles contain no roots") {
  CHECK(roots_1d(kUniform, {0.5, 10.0, 0.05, 2.0}).empty());
  CHECK(roots_1d(build_profile("stack-air-si"), {0.2, 6.0, 0.01, 1.0}).empty());
}

TEST_CASE("matched termination has no zeros") {
  const LayeredProfile1D matched{{{1.0, 1.0}}, 1.0};
  CHECK(winding_number(matched, {0.3, 12.0, -3.0, 1.0}) == 0);
}

TEST_CASE("a zero on the contour raises BoundaryZero") {
  const double im = -0.5 * std::log(2.0);
  CHECK_THROWS_AS(winding_number(kUniform, {1.0, 4.0, im, 1.0}), BoundaryZero);
}

TEST_CASE("f is analytic: real-step and imaginary-step derivatives agree") {
  const auto prof = build_profile("stack-air-si");
  for (cplx z : {cplx(1.3, -0.2), cplx(2.7, -0.05)}) {
    const double h = 1e-5;
    const cplx dre = (dispersion_1d(prof, z + h) - dispersion_1d(prof, z - h)) / (2.0 * h);
    const cplx dim = (dispersion_1d(prof, z + cplx(0, h)) - dispersion_1d(prof, z - cplx(0, h))) /
                     cplx(0.0, 2.0 * h);
    CHECK(std::abs(dre - dim) <= 1e-8 * (1.0 + std::abs(dre)));
  }
}

TEST_CASE("profile_from_scene reads layers from the slab scene") {
  SlabParams p;
  p.cells = 8;
  p.eps = 2.0;
  p.eps_top = 1.0;
  const auto prof = profile_from_scene(make_slab(p));
  CHECK(prof.gamma == doctest::Approx(3.0));
  CHECK(prof.length() == doctest::Approx(1.0));
  double top_len = 0.0;
  for (const auto& l : prof.layers)
    if (l.eps == 1.0) top_len += l.thickness;
  CHECK(top_len == doctest::Approx(1.0 / 8));
}
