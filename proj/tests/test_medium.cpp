#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qpar/medium.hpp"
#include "qpar/testbeds.hpp"
#include "scenes.hpp"

using namespace qpar;

namespace {

MaterialScene small_box(double eps) {
  BoxParams p;
  p.n = 6;
  p.opt_margin = 2;
  p.eps = eps;
  p.eps_minus = 1.0;
  p.eps_plus = 4.0;
  return make_box(p);
}

}  // namespace

TEST_CASE("grid rejects degenerate axes and oversize grids") {
  CHECK_THROWS_AS(Grid({1, 4, 4}, {1.0, 1.0, 1.0}), Error);
  CHECK_THROWS_AS(Grid({4, 4, 4}, {1.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(Grid({64, 64, 64}, {1.0, 1.0, 1.0}, {}, 1000), Error);
  const Grid g({3, 4, 5}, {1.0, 1.0, 1.0});
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto ijk = g.cell_coords(c);
    CHECK(g.cell_index(ijk[0], ijk[1], ijk[2]) == c);
  }
}

TEST_CASE("validate_scene: uniform eps_minus on D_opt is feasible") {
  const auto scene = small_box(1.0);
  CHECK(validate_scene(scene).ok());
}

TEST_CASE("validate_scene: an upper-bound violation names the cell") {
  const auto base = small_box(1.0);
  auto eps = base.eps();
  const std::size_t cell = base.opt_cells()[3];
  eps[cell] = 4.0 * 1.01;
  const auto report = validate_scene(base.with_eps(eps));
  REQUIRE_FALSE(report.ok());
  CHECK(report.has(Rule::UpperBound));
  bool named = false;
  for (const auto& v : report.violations) named = named || (v.cell && *v.cell == cell);
  CHECK(named);
}

TEST_CASE("validate_scene: Cylinder2D variation along x3 is a symmetry violation") {
  const auto base = test::cylinder_scene(2.0);
  REQUIRE(validate_scene(base).ok());
  auto eps = base.eps();
  eps[base.grid().cell_index(1, 1, 2)] = 3.0;
  CHECK(validate_scene(base.with_eps(eps)).has(Rule::FamilySymmetry));
}

TEST_CASE("validate_scene: outer mismatch, negative sigma and bad impedance") {
  const auto base = small_box(1.0);
  auto eps = base.eps();
  eps[0] = 2.0;
  CHECK(validate_scene(base.with_eps(eps)).has(Rule::OuterMismatch));

  auto sides = base.boundary();
  sides[0].impedance[0] = -1.0;
  const MaterialScene bad_z(base.grid(), base.opt(), base.family(), base.eps(), base.sigma(),
                            sides);
  CHECK(validate_scene(bad_z).has(Rule::ImpedanceNonPositive));

  auto sigma = base.sigma();
  sigma[0] = -0.5;
  const MaterialScene bad_s(base.grid(), base.opt(), base.family(), base.eps(), sigma,
                            base.boundary());
  CHECK(validate_scene(bad_s).has(Rule::SigmaNegative));
}

TEST_CASE("admissible_direction examples") {
  const auto s2 = small_box(2.0);
  const std::size_t m = s2.opt_cells().size();

  SUBCASE("target equal to eps gives zero") {
    std::vector<double> t(m, 2.0);
    const auto d = admissible_direction(s2, t);
    for (double v : d.p) CHECK(v == 0.0);
  }
  SUBCASE("eps 2 to target 4 gives -0.25") {
    std::vector<double> t(m, 4.0);
    const auto d = admissible_direction(s2, t);
    for (std::size_t c : s2.opt_cells()) CHECK(d.p[c] == doctest::Approx(-0.25).epsilon(1e-15));
  }
  SUBCASE("eps_minus to eps_plus attains the lower box bound") {
    const auto s1 = small_box(1.0);
    std::vector<double> t(m, 4.0);
    const auto d = admissible_direction(s1, t);
    for (std::size_t c : s1.opt_cells()) {
      CHECK(d.p[c] == doctest::Approx(1.0 / 4.0 - 1.0).epsilon(1e-15));
      CHECK(d.p[c] == doctest::Approx(direction_box(s1, c).first).epsilon(1e-15));
    }
  }
  SUBCASE("infeasible target names the first violating cell") {
    std::vector<double> t(m, 2.0);
    t[5] = 9.0;
    t[7] = 0.5;
    try {
      (void)admissible_direction(s2, t);
      FAIL("expected InfeasibleTarget");
    } catch (const InfeasibleTarget& e) {
      CHECK(e.cell() == s2.opt_cells()[5]);
    }
  }
}

TEST_CASE("symmetry_project examples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  SUBCASE("Full3D leaves p unchanged") {
    const auto s = small_box(2.0);
    Direction d{std::vector<double>(s.grid().cell_count(), 0.0)};
    for (std::size_t c : s.opt_cells()) d.p[c] = u(rng);
    CHECK(symmetry_project(d, s).p == d.p);
  }
  SUBCASE("Cylinder2D column with +1 above and -1 below averages to 0") {
    const auto s = test::cylinder_scene(2.0);
    Direction d{std::vector<double>(s.grid().cell_count(), 0.0)};
    for (std::size_t c : s.opt_cells()) d.p[c] = s.grid().cell_coords(c)[2] >= 3 ? 1.0 : -1.0;
    for (double v : symmetry_project(d, s).p) CHECK(v == 0.0);
  }
  SUBCASE("Slab1D constant per layer is a fixed point") {
    SlabParams sp;
    sp.cells = 8;
    sp.eps = 2.0;
    const auto s = make_slab(sp);
    Direction d{std::vector<double>(s.grid().cell_count(), 0.0)};
    std::vector<double> layer(8);
    for (auto& v : layer) v = u(rng);
    for (std::size_t c : s.opt_cells()) d.p[c] = layer[std::size_t(s.grid().cell_coords(c)[2])];
    const auto q = symmetry_project(d, s);
    for (std::size_t c = 0; c < q.p.size(); ++c) CHECK(q.p[c] == doctest::Approx(d.p[c]).epsilon(1e-15));
  }
}

TEST_CASE("bang_bang_round examples") {
  const auto s = small_box(2.5);
  const std::size_t n = s.grid().cell_count();
  SUBCASE("phi = 0 leaves the scene unchanged") {
    std::vector<double> phi(n, 0.0);
    CHECK(bang_bang_round(s, phi, 0.0).eps() == s.eps());
  }
  SUBCASE("phi > 0 with zero dead band gives eps_plus") {
    std::vector<double> phi(n, 1.0);
    const auto r = bang_bang_round(s, phi, 0.0);
    for (std::size_t c : s.opt_cells()) CHECK(r.eps()[c] == 4.0);
    CHECK(validate_scene(r).ok());
  }
  SUBCASE("phi < 0 gives eps_minus and the dead band keeps eps") {
    std::vector<double> phi(n, -1.0);
    phi[s.opt_cells()[0]] = 1e-3;
    const auto r = bang_bang_round(s, phi, 1e-2);
    CHECK(r.eps()[s.opt_cells()[0]] == 2.5);
    CHECK(r.eps()[s.opt_cells()[1]] == 1.0);
  }
}

TEST_CASE("apply_inverse_step clips to the bounds and snaps") {
  const auto s = small_box(2.0);
  Direction d{std::vector<double>(s.grid().cell_count(), 0.0)};
  for (std::size_t c : s.opt_cells()) d.p[c] = 1.0;
  const auto out = apply_inverse_step(s, d, 10.0);
  CHECK(out.clipped == s.opt_cells().size());
  for (std::size_t c : s.opt_cells()) CHECK(out.scene.eps()[c] == 1.0);
  const auto half = apply_inverse_step(s, d, 0.25);
  CHECK(half.clipped == 0);
  for (std::size_t c : s.opt_cells()) CHECK(half.scene.eps()[c] == doctest::Approx(4.0 / 3.0));
  CHECK(validate_scene(half.scene).ok());
}

TEST_CASE("fiber_average broadcasts the layer mean") {
  SlabParams sp;
  sp.cells = 6;
  const auto s = make_slab(sp);
  std::vector<double> f(s.grid().cell_count(), 0.0);
  for (std::size_t c : s.opt_cells()) {
    const auto ijk = s.grid().cell_coords(c);
    f[c] = double(ijk[0] * 2 + ijk[1]);
  }
  const auto avg = fiber_average(s, f);
  for (std::size_t c : s.opt_cells()) CHECK(avg[c] == doctest::Approx(1.5));
}
