#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "qpar/pareto.hpp"
#include "qpar/testbeds.hpp"

using namespace qpar;

namespace {

// Vertex enumeration: at most one component is strictly between its bounds.
double brute_force_lp(const BoxLp& lp, bool& feasible) {
  const std::size_t n = lp.a.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<double> x(n);
      double rest = lp.rhs;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == j) continue;
        x[i] = (mask >> i) & 1 ? lp.hi[i] : lp.lo[i];
        rest -= lp.b[i] * x[i];
      }
      if (lp.b[j] == 0.0) {
        if (std::abs(rest) > 1e-12) continue;
        x[j] = lp.a[j] > 0 ? lp.hi[j] : lp.lo[j];
      } else {
        x[j] = rest / lp.b[j];
        if (x[j] < lp.lo[j] - 1e-12 || x[j] > lp.hi[j] + 1e-12) continue;
      }
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += lp.a[i] * x[i];
      best = std::max(best, v);
    }
  feasible = std::isfinite(best);
  return best;
}

MaterialScene air_si_slab(int cells) {
  SlabParams sp;
  sp.cells = cells;
  sp.eps = kEpsSilicon;
  sp.eps_top = kEpsAir;
  return make_slab(sp);
}

SensitivityDensity fake_density(const MaterialScene& scene, cplx g_opt) {
  SensitivityDensity d;
  d.g.assign(scene.grid().cell_count(), 0.0);
  for (std::size_t c : scene.opt_cells()) d.g[c] = g_opt;
  d.denom = 1.0;
  d.omega0 = 1.0;
  d.cell_volume = scene.grid().cell_volume();
  d.support = scene.opt().cells;
  return d;
}

// Gamma of the uniform profile whose resonance has Re omega nearest alpha.
double uniform_gamma(double eps, int cells, double alpha) {
  const double h = 1.0 / cells;
  const LayeredProfile1D prof{{{1.0 - h, eps}, {h, kEpsAir}}, 3.0};
  const auto roots = roots_1d(prof, {0.05, alpha + 3.0, -3.0, -1e-3});
  REQUIRE(!roots.empty());
  const Root1D* best = &roots.front();
  for (const auto& r : roots)
    if (std::abs(r.omega.real() - alpha) < std::abs(best->omega.real() - alpha)) best = &r;
  return -best->omega.imag();
}

const ParetoPoint& optimum_15() {
  static const ParetoPoint pt = optimize(air_si_slab(64), 1.5, {});
  return pt;
}

}  // namespace

TEST_CASE("box LP matches vertex enumeration and satisfies KKT") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    BoxLp lp;
    const std::size_t n = 2 + trial % 5;
    for (std::size_t i = 0; i < n; ++i) {
      lp.a.push_back(u(rng));
      lp.b.push_back(trial % 7 == 0 && i == 0 ? 0.0 : u(rng));
      lp.lo.push_back(-std::abs(u(rng)));
      lp.hi.push_back(std::abs(u(rng)));
    }
    lp.rhs = 0.5 * u(rng);
    bool feasible = false;
    const double oracle = brute_force_lp(lp, feasible);
    const auto sol = solve_box_lp(lp);
    CHECK(sol.feasible == feasible);
    if (!feasible) continue;
    CHECK(sol.value == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(sol.constraint == doctest::Approx(lp.rhs).epsilon(1e-10));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(sol.x[i] >= lp.lo[i] - 1e-14);
      CHECK(sol.x[i] <= lp.hi[i] + 1e-14);
      const double r = lp.a[i] - sol.lambda * lp.b[i];
      if (r > 1e-9) CHECK(sol.x[i] == doctest::Approx(lp.hi[i]));
      if (r < -1e-9) CHECK(sol.x[i] == doctest::Approx(lp.lo[i]));
    }
  }
}

TEST_CASE("box LP with an unreachable right-hand side reports infeasible") {
  const BoxLp lp{{1.0, 1.0}, {1.0, 1.0}, {-1.0, -1.0}, {1.0, 1.0}, 5.0};
  const auto sol = solve_box_lp(lp);
  CHECK_FALSE(sol.feasible);
  CHECK(sol.constraint == doctest::Approx(2.0));
}

TEST_CASE("plan_step with Im g < 0 at eps_minus pins p to its lower bound") {
  SlabParams sp;
  sp.cells = 8;
  sp.eps = kEpsAir;
  const auto scene = make_slab(sp);
  const auto plan = plan_step(fake_density(scene, {0.0, -2.0}), scene);
  CHECK_FALSE(plan.stationary);
  CHECK(plan.value > 0.0);
  CHECK(std::abs(plan.predicted_shift.real()) <= 1e-14);
  for (std::size_t c : scene.opt_cells())
    CHECK(plan.p.p[c] == doctest::Approx(direction_box(scene, c).first));
}

TEST_CASE("plan_step with g = 0 is stationary and apply_step is a no-op") {
  const auto scene = air_si_slab(8);
  const auto plan = plan_step(fake_density(scene, 0.0), scene);
  CHECK(plan.stationary);
  CHECK(plan.zero_density);
  EigenPair pair;
  pair.omega = {1.0, -0.1};
  const auto res = apply_step(scene, pair, plan, 1.0);
  CHECK_FALSE(res.accepted);
  CHECK(res.scene.eps() == scene.eps());
  CHECK(res.trials == 0);
}

TEST_CASE("plan_correction keeps Im C1 at zero and moves Re toward the target") {
  const auto scene = air_si_slab(32);
  const auto op = DiscreteOperator::assemble(scene);
  const auto pairs = find_eigs(op, {{1.2, -0.2}, 1.0, 1});
  REQUIRE(pairs.size() == 1);
  const auto dens = density(pairs[0], op);
  for (double shift : {0.01, -0.01}) {
    const auto plan = plan_correction(dens, scene, 1.0, shift);
    CHECK(plan.kind == StepKind::Correction);
    const cplx c1 = first_order_shift(dens, plan.p);
    CHECK(std::abs(c1.imag()) <= 1e-10 * std::abs(c1));
    CHECK(c1.real() * shift > 0.0);
    CHECK(std::abs(c1.real()) <= std::abs(shift) * (1.0 + 1e-12));
  }
}

TEST_CASE("a planned descent step lowers Gamma on re-solve") {
  const auto scene = air_si_slab(32);
  const auto op = DiscreteOperator::assemble(scene);
  const auto pairs = find_eigs(op, {{1.2, -0.2}, 1.0, 1}, {.tol = 1e-11});
  REQUIRE(pairs.size() == 1);
  const auto plan = plan_step(density(pairs[0], op), scene, 0.05);
  REQUIRE(plan.value > 0.0);
  for (double t : {1e-2, 1e-3}) {
    const auto next = apply_inverse_step(scene, plan.p, t).scene;
    const auto op2 = DiscreteOperator::assemble(next);
    const auto moved = find_eigs(op2, {pairs[0].omega + t * plan.predicted_shift, 0.05, 1},
                                 {.tol = 1e-11, .start = &pairs[0].psi});
    REQUIRE(moved.size() == 1);
    CHECK(moved[0].gamma() < pairs[0].gamma());
  }
  LineSearchOptions lo;
  lo.eigen.tol = 1e-11;
  const auto res = apply_step(scene, pairs[0], plan, pairs[0].omega.real(), lo);
  REQUIRE(res.accepted);
  CHECK(res.pair.gamma() < pairs[0].gamma());
}

TEST_CASE("optimize on the air/silicon slab converges to a bang-bang design") {
  const auto& pt = optimum_15();
  CHECK(pt.converged);
  CHECK(std::abs(pt.pair.omega.real() - 1.5) <= 1e-6 * 1.5);
  CHECK(pt.el_report.residual <= 1e-6);
  CHECK(pt.el_report.bang_bang_fraction >= 0.99);
  for (std::size_t k = 1; k < pt.gamma_trace.size(); ++k)
    CHECK(pt.gamma_trace[k] < pt.gamma_trace[k - 1]);
  CHECK(pt.gamma < uniform_gamma(kEpsAir, 64, 1.5));
  CHECK(pt.gamma < uniform_gamma(kEpsSilicon, 64, 1.5));
  CHECK(validate_scene(pt.scene).ok());
}

TEST_CASE("a converged optimum is a fixed point") {
  const auto& pt = optimum_15();
  REQUIRE(pt.converged);
  const auto again = optimize_from(pt.scene, pt.pair, 1.5, {});
  CHECK(again.converged);
  CHECK(again.iterations <= 1);
  CHECK(again.gamma == doctest::Approx(pt.gamma).epsilon(1e-9));
  std::size_t changed = 0;
  for (std::size_t c = 0; c < pt.scene.eps().size(); ++c)
    changed += std::abs(again.scene.eps()[c] - pt.scene.eps()[c]) > 1e-9 * pt.scene.eps()[c];
  CHECK(changed == 0);
}

TEST_CASE("alpha with no eigenvalue in the window is not achievable") {
  OptimizeOptions o;
  o.window_radius = 0.05;
  CHECK_THROWS_AS(optimize(air_si_slab(32), 1.0, o), NotAchievable);
  const auto entries = sweep_frontier(air_si_slab(32), {1.0}, o);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].status == "not-achievable");
  CHECK_FALSE(entries[0].point.has_value());
}

TEST_CASE("sweep: singleton equals optimize and re-runs are bitwise identical") {
  const auto single = sweep_frontier(air_si_slab(64), {1.5});
  REQUIRE(single.size() == 1);
  REQUIRE(single[0].point);
  CHECK(single[0].point->gamma == optimum_15().gamma);
  CHECK(single[0].point->scene.eps() == optimum_15().scene.eps());

  const std::vector<double> alphas{1.2, 1.4};
  const auto a = sweep_frontier(air_si_slab(64), alphas);
  const auto b = sweep_frontier(air_si_slab(64), alphas);
  REQUIRE(a.size() == 2);
  for (std::size_t k = 0; k < a.size(); ++k) {
    REQUIRE(a[k].point);
    REQUIRE(b[k].point);
    CHECK(a[k].point->gamma == b[k].point->gamma);
    CHECK(a[k].point->scene.eps() == b[k].point->scene.eps());
    CHECK(a[k].point->converged);
  }
  CHECK_THROWS_AS(sweep_frontier(air_si_slab(64), {1.4, 1.2}), Error);
}

TEST_CASE("optimum beats every coarse 8-layer bang-bang profile near alpha") {
  // Exhaustive search over 256 profiles with resonances inside Re omega in [1.45, 1.55].
  const double h = 1.0 / 64;
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 256; ++mask) {
    LayeredProfile1D prof;
    prof.gamma = 3.0;
    for (int l = 0; l < 8; ++l)
      prof.layers.push_back({(1.0 - h) / 8, (mask >> l) & 1 ? kEpsSilicon : kEpsAir});
    prof.layers.push_back({h, kEpsAir});
    for (const auto& r : roots_1d(prof, {1.45, 1.5501, -2.0, -1e-4}))
      best = std::min(best, -r.omega.imag());
  }
  REQUIRE(std::isfinite(best));
  CHECK(optimum_15().gamma < best);
}
