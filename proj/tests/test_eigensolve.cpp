#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "fields.hpp"
#include "qpar/eigensolve.hpp"
#include "qpar/testbeds.hpp"

using namespace qpar;
using std::numbers::pi;

namespace {

const cplx kRoot1(pi, -0.5 * std::log(2.0));

EigenPair raw_pair(const DiscreteOperator& op, cplx omega, const Field& psi) {
  EigenPair p;
  p.omega = omega;
  p.psi = psi;
  p.pairing = op.pairing(psi, psi);
  p.norm_sq = std::pow(op.norm(psi), 2);
  p.residual = eigen_residual(op, omega, psi);
  return p;
}

}  // namespace

TEST_CASE("shift-invert solves (M - mu) x = b") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-absorber"));
  const cplx mu(5.0, -0.3);
  const ShiftInvert si(op, mu);
  std::mt19937_64 rng(1);
  const auto b = test::random_field(op, rng);
  const auto x = si.solve(b);
  const auto r = op.apply(x) - mu * x - b;
  CHECK(op.norm(r) <= 1e-10 * op.norm(b));
}

TEST_CASE("slab eigenvalue converges to the dispersion root at second order") {
  std::vector<double> err;
  for (int cells : {16, 32, 64}) {
    SlabParams p;
    p.cells = cells;
    const auto op = DiscreteOperator::assemble(make_slab(p));
    const auto pairs = find_eigs(op, {kRoot1, 0.5, 1}, {.tol = 1e-11});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].residual <= 1e-9);
    err.push_back(std::abs(pairs[0].omega - kRoot1));
  }
  CHECK(err[2] <= 2e-3);
  CHECK(std::log2(err[1] / err[2]) >= 1.8);
  CHECK(std::log2(err[0] / err[1]) >= 1.8);
}

TEST_CASE("count = 3 returns at most 3 pairs with small residuals") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-impedance"));
  const auto pairs = find_eigs(op, {{7.0, -1.0}, 3.0, 3});
  CHECK(pairs.size() <= 3);
  CHECK(!pairs.empty());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    CHECK(pairs[k].residual <= 1e-9);
    CHECK(pairs[k].omega.imag() < 0.0);
    CHECK(std::abs(pairs[k].omega - cplx(7.0, -1.0)) <= 3.0);
    if (k > 0)
      CHECK(std::abs(pairs[k].omega - cplx(7.0, -1.0)) >=
            std::abs(pairs[k - 1].omega - cplx(7.0, -1.0)));
  }
}

TEST_CASE("closed box lowest mode is simple and the verdict is scale invariant") {
  const auto op = DiscreteOperator::assemble(build_scene("box-closed"));
  const auto pairs = find_eigs(op, {{4.6, 0.0}, 0.3, 1});
  REQUIRE(pairs.size() == 1);
  CHECK(simplicity_check(pairs[0]) == Simplicity::Simple);
  const auto scaled = raw_pair(op, pairs[0].omega, -3.5 * pairs[0].psi);
  CHECK(simplicity_check(scaled) == Simplicity::Simple);
}

TEST_CASE("a mixed eigenvector of a degenerate cube mode can have zero pairing") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-symmetric"));
  const auto pairs = find_eigs(op, {{pi * std::sqrt(2.0), 0.0}, 0.2, 2});
  REQUIRE(pairs.size() == 2);
  CHECK(std::abs(pairs[0].omega - pairs[1].omega) <= 1e-8);
  // Solve a^2 P11 + 2 a P12 + P22 = 0 for the mixing coefficient a.
  const cplx p11 = op.pairing(pairs[0].psi, pairs[0].psi);
  const cplx p12 = op.pairing(pairs[0].psi, pairs[1].psi);
  const cplx p22 = op.pairing(pairs[1].psi, pairs[1].psi);
  const cplx a = (-p12 + std::sqrt(p12 * p12 - p11 * p22)) / p11;
  const Field mix = a * pairs[0].psi + pairs[1].psi;
  const auto mixed = raw_pair(op, pairs[0].omega, mix);
  CHECK(mixed.residual <= 1e-7);
  CHECK(simplicity_check(mixed) == Simplicity::DegenerateOrIllConditioned);
}

TEST_CASE("fix_phase is idempotent and gauge invariant") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-impedance"));
  const auto pairs = find_eigs(op, {{7.0, -1.0}, 3.0, 1});
  REQUIRE(pairs.size() == 1);
  const auto once = fix_phase(pairs[0], op);
  const auto twice = fix_phase(once.pair, op);
  CHECK(std::abs(twice.theta) <= 1e-12);

  auto rotated = pairs[0];
  rotated.psi = std::exp(cplx(0.0, pi / 7.0)) * rotated.psi;
  const auto r = fix_phase(rotated, op);
  const double d_plus = op.norm(r.pair.psi - once.pair.psi);
  const double d_minus = op.norm(r.pair.psi + once.pair.psi);
  CHECK(std::min(d_plus, d_minus) <= 1e-10 * op.norm(once.pair.psi));
}

TEST_CASE("fix_phase centers the cone on the positive imaginary axis") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-impedance"));
  const auto pairs = find_eigs(op, {{7.0, -1.0}, 3.0, 1});
  REQUIRE(pairs.size() == 1);
  const auto fixed = fix_phase(pairs[0], op);
  double lo = pi, hi = -pi;
  for (const auto& g : cone_generators(fixed.pair, op)) {
    if (std::abs(g.w) == 0.0) continue;
    for (cplx w : {g.up ? g.w : cplx(0), g.down ? -g.w : cplx(0)}) {
      if (w == 0.0) continue;
      lo = std::min(lo, std::arg(w));
      hi = std::max(hi, std::arg(w));
    }
  }
  REQUIRE(lo <= hi);
  CHECK(lo >= -1e-8);
  CHECK(hi <= pi + 1e-8);
  CHECK(0.5 * (lo + hi) == doctest::Approx(pi / 2).epsilon(1e-8));
}

TEST_CASE("eigenpair files round trip") {
  const auto scene = build_scene("cube-absorber");
  const auto op = DiscreteOperator::assemble(scene);
  const auto pairs = find_eigs(op, {{6.0, -0.5}, 2.0, 1});
  REQUIRE(pairs.size() == 1);
  const auto path = std::filesystem::temp_directory_path() / "qpar_test_pair.qpef";
  write_eigenpair(path, pairs[0], scene);
  const auto back = read_eigenpair(path, op);
  CHECK(back.omega == pairs[0].omega);
  CHECK((back.psi.e - pairs[0].psi.e).norm() == 0.0);
  CHECK((back.psi.h - pairs[0].psi.h).norm() == 0.0);

  const auto other = DiscreteOperator::assemble(build_scene("box-closed"));
  CHECK_THROWS_AS(read_eigenpair(path, other), Error);
  std::filesystem::remove(path);
}
