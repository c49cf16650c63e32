#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fields.hpp"
#include "qpar/eigensolve.hpp"
#include "qpar/testbeds.hpp"

using namespace qpar;
using std::numbers::pi;

namespace {

MaterialScene closed_box(int n) {
  BoxParams p;
  p.n = n;
  p.walls = BoundaryKind::Reflecting;
  p.opt_margin = n / 4;
  return make_box(p);
}

// Yee-grid cavity frequency of mode (l, m, q) in a perfectly reflecting box.
double yee_mode(std::array<double, 3> size, int n, std::array<int, 3> lmq) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double h = size[a] / n;
    const double k = pi * lmq[a] / size[a];
    s += std::pow(2.0 / h * std::sin(0.5 * k * h), 2);
  }
  return std::sqrt(s);
}

double rel_diff(const Field& a, const Field& b, const DiscreteOperator& op) {
  return op.norm(a - b) / std::max(op.norm(a), 1e-300);
}

}  // namespace

TEST_CASE("operator is linear and maps zero to zero") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-absorber"));
  const auto z = op.apply(op.zero_field());
  CHECK(z.e.norm() == 0.0);
  CHECK(z.h.norm() == 0.0);

  std::mt19937_64 rng(3);
  const auto f1 = test::random_field(op, rng), f2 = test::random_field(op, rng);
  const cplx a(0.3, -1.2), b(-2.0, 0.7);
  const auto lhs = op.apply(a * f1 + b * f2);
  const auto rhs = a * op.apply(f1) + b * op.apply(f2);
  CHECK(rel_diff(lhs, rhs, op) <= 1e-12);
}

TEST_CASE("adjoint_state conjugates and flips H") {
  const auto op = DiscreteOperator::assemble(build_scene("box-closed"));
  std::mt19937_64 rng(5);
  auto f = test::random_field(op, rng);
  f.e = f.e.real().cast<cplx>();
  f.h = f.h.real().cast<cplx>();
  const auto s = adjoint_state(f);
  CHECK((s.e - f.e).norm() == 0.0);
  CHECK((s.h + f.h).norm() == 0.0);

  const auto g = test::random_field(op, rng);
  const auto gg = adjoint_state(adjoint_state(g));
  CHECK((gg.e - g.e).norm() == 0.0);
  CHECK((gg.h - g.h).norm() == 0.0);
}

TEST_CASE("apply_adjoint is the adjoint in the energy inner product") {
  for (const char* name : {"cube-impedance", "cube-absorber"}) {
    const auto op = DiscreteOperator::assemble(build_scene(name));
    std::mt19937_64 rng(11);
    const auto a = test::random_field(op, rng), b = test::random_field(op, rng);
    const cplx lhs = op.inner(op.apply_adjoint(a), b);
    const cplx rhs = op.inner(a, op.apply(b));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * op.norm(a) * op.norm(op.apply(b)));
  }
}

TEST_CASE("pairing symmetry: pairing(M a, b) = pairing(a, M b)") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-impedance"));
  std::mt19937_64 rng(13);
  const auto a = test::random_field(op, rng), b = test::random_field(op, rng);
  const cplx lhs = op.pairing(op.apply(a), b), rhs = op.pairing(a, op.apply(b));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * op.norm(a) * op.norm(op.apply(b)));
}

TEST_CASE("eigenpair adjoint identity tested against random probes") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-impedance"));
  const auto pairs = find_eigs(op, {{7.0, -1.0}, 3.0, 2}, {.tol = 1e-11});
  REQUIRE(!pairs.empty());
  std::mt19937_64 rng(17);
  for (const auto& p : pairs) {
    const auto star = adjoint_state(p.psi);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const auto phi = test::random_field(op, rng);
      const auto mphi = op.apply(phi);
      // <A star, phi> = <star, M phi>; A star = conj(omega) star means <star, M phi> = omega <star, phi>.
      const cplx defect = op.inner(star, mphi) - p.omega * op.inner(star, phi);
      worst = std::max(worst, std::abs(defect) / (op.norm(star) * op.norm(mphi)));
    }
    CHECK(worst <= 1e-9);
    const auto direct = op.apply_adjoint(star) - std::conj(p.omega) * star;
    CHECK(op.norm(direct) <= 1e-9 * op.norm(star) * (1.0 + std::abs(p.omega)));
  }
}

TEST_CASE("closed box modes match the Yee dispersion and converge at second order") {
  const std::array<double, 3> size{1.0, 0.9, 0.8};
  const double exact = pi * std::sqrt(1.0 + 1.0 / (0.9 * 0.9));  // mode (1, 1, 0)
  std::vector<double> err;
  for (int n : {6, 12}) {
    const auto op = DiscreteOperator::assemble(closed_box(n));
    const auto pairs = find_eigs(op, {{4.6, 0.0}, 0.25, 1}, {.tol = 1e-11});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].omega.real() == doctest::Approx(yee_mode(size, n, {1, 1, 0})).epsilon(1e-9));
    CHECK(std::abs(pairs[0].omega.imag()) <= 1e-9);
    err.push_back(std::abs(pairs[0].omega.real() - exact));
  }
  const double order = std::log2(err[0] / err[1]);
  CHECK(order == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("passive scenes have no eigenvalue in the upper half-plane") {
  const auto op = DiscreteOperator::assemble(build_scene("cube-impedance"));
  const auto pairs = find_eigs(op, {{6.0, 0.6}, 0.5, 2});
  CHECK(pairs.empty());
}

TEST_CASE("export_coo writes one line per nonzero") {
  const auto op = DiscreteOperator::assemble(closed_box(4));
  std::ostringstream out;
  op.export_coo(out);
  const auto text = out.str();
  const auto lines = std::count(text.begin(), text.end(), '\n');
  CHECK(lines == op.matrix().nonZeros());
}

TEST_CASE("assembly refuses an invalid scene") {
  auto scene = closed_box(4);
  auto eps = scene.eps();
  eps[scene.opt_cells()[0]] = 100.0;
  CHECK_THROWS_AS(DiscreteOperator::assemble(scene.with_eps(eps)), ValidationError);
}
