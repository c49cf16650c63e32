#include "qpar/perturb2.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "qpar/errors.hpp"

namespace qpar {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

}  // namespace

std::vector<std::string> probe_labels() { return {"linear", "swapped", "sin", "quadratic"}; }

AnalyticProbe make_probe(const std::string& label) {
  if (label == "linear")
    return {label, [](cplx z, cplx a, cplx b) { return z - a - kI * b; }, 1.0};
  if (label == "swapped")
    return {label, [](cplx z, cplx a, cplx b) { return z - b - kI * a; }, 1.0};
  if (label == "sin") {
    const cplx e1 = std::polar(1.0, kPi / 6.0), e2 = std::polar(1.0, 2.0 * kPi / 3.0);
    return {label, [e1, e2](cplx z, cplx a, cplx b) { return std::sin(z) - a * e1 - b * e2; },
            1.0};
  }
  if (label == "quadratic")
    return {label, [](cplx z, cplx a, cplx b) { return z + z * z - a - kI * b + a * b; }, 0.5};
  throw Error("unknown probe '" + label + "'");
}

cplx cauchy_derivative(const std::function<cplx(cplx)>& f, cplx z, double r, int points) {
  cplx s = 0.0;
  for (int k = 0; k < points; ++k) {
    const cplx u = std::polar(1.0, 2.0 * kPi * (k + 0.5) / points);
    s += f(z + r * u) / u;
  }
  return s / (double(points) * r);
}

double analyticity_defect(const AnalyticProbe& probe, std::uint64_t seed, int points) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double rho = 0.5 * probe.radius / std::sqrt(2.0);
  const double h = 1e-5 * probe.radius;
  double worst = 0.0;
  for (int n = 0; n < points; ++n) {
    std::array<cplx, 3> x;
    for (auto& v : x) v = rho * cplx(unit(rng), unit(rng));
    for (int var = 0; var < 3; ++var) {
      auto f = [&](cplx d) {
        auto y = x;
        y[std::size_t(var)] += d;
        return probe.eval(y[0], y[1], y[2]);
      };
      const cplx dr = (f(h) - f(-h)) / (2.0 * h);
      const cplx di = (f(kI * h) - f(-kI * h)) / (2.0 * kI * h);
      worst = std::max(worst, std::abs(dr - di) / std::max(1.0, std::abs(dr)));
    }
  }
  return worst;
}

EtaPair eta_coefficients(const AnalyticProbe& probe) {
  const double r = 1e-2 * probe.radius;
  const cplx q0 = probe.eval(0.0, 0.0, 0.0);
  if (std::abs(q0) > 1e-12) throw Error("probe " + probe.label + " does not vanish at the origin");
  const cplx qz = cauchy_derivative([&](cplx z) { return probe.eval(z, 0.0, 0.0); }, 0.0, r);
  if (std::abs(qz) < 1e-8) throw Error("probe " + probe.label + ": the zero is not simple");
  const cplx q1 = cauchy_derivative([&](cplx a) { return probe.eval(0.0, a, 0.0); }, 0.0, r);
  const cplx q2 = cauchy_derivative([&](cplx b) { return probe.eval(0.0, 0.0, b); }, 0.0, r);
  EtaPair e;
  e.eta1 = -q1 / qz;
  e.eta2 = -q2 / qz;
  if (std::abs(e.eta1) < 1e-10 || std::abs(e.eta2) < 1e-10)
    throw Error("probe " + probe.label + ": a first-order coefficient vanishes");
  double gap = wrap_2pi(std::arg(e.eta2) - std::arg(e.eta1));
  if (gap > kPi) {
    std::swap(e.eta1, e.eta2);
    e.swapped = true;
    gap = 2.0 * kPi - gap;
  }
  constexpr double kParallel = 1e-10;
  if (gap < kParallel || gap > kPi - kParallel)
    throw Error("probe " + probe.label + ": the two directions are parallel or opposite");
  e.theta1 = std::arg(e.eta1);
  e.theta0 = gap;
  e.theta2 = e.theta1 + gap;
  return e;
}

AnalyticProbe ordered_probe(const AnalyticProbe& probe, const EtaPair& eta) {
  if (!eta.swapped) return probe;
  AnalyticProbe p = probe;
  auto f = probe.eval;
  p.eval = [f](cplx z, cplx a, cplx b) { return f(z, b, a); };
  return p;
}

namespace {

// Newton on z -> Q(z; zeta) from z0. Returns nullopt if it stalls or leaves the polydisc.
std::optional<cplx> newton(const AnalyticProbe& p, cplx z0, cplx a, cplx b, double tol) {
  auto q = [&](cplx z) { return p.eval(z, a, b); };
  const double r = 1e-3 * p.radius;
  cplx z = z0;
  for (int it = 0; it < 60; ++it) {
    const cplx f = q(z);
    if (std::abs(f) <= tol) return z;
    const cplx df = cauchy_derivative(q, z, r, 16);
    if (df == 0.0) return std::nullopt;
    z -= f / df;
    if (!(std::abs(z) < p.radius)) return std::nullopt;
  }
  return std::abs(q(z)) <= tol ? std::optional<cplx>(z) : std::nullopt;
}

}  // namespace

cplx zero_track(const AnalyticProbe& probe, const EtaPair& eta, double zeta1, double zeta2,
                double tol) {
  const AnalyticProbe p = ordered_probe(probe, eta);
  if (zeta1 == 0.0 && zeta2 == 0.0) return 0.0;
  const cplx guess = eta.eta1 * zeta1 + eta.eta2 * zeta2;
  if (auto z = newton(p, guess, zeta1, zeta2, tol)) return *z;

  // Homotopy along the ray s * zeta, halving the increment on failure.
  cplx z = 0.0;
  double s = 0.0, ds = 0.25;
  while (s < 1.0) {
    const double s1 = std::min(1.0, s + ds);
    const cplx pred = z + (s1 - s) * guess;
    if (auto zn = newton(p, pred, s1 * zeta1, s1 * zeta2, tol)) {
      z = *zn;
      s = s1;
      ds = std::min(2.0 * ds, 0.25);
    } else {
      ds *= 0.5;
      if (ds < 1e-8) throw ConvergenceError("zero_track: homotopy failed for probe " + probe.label);
    }
  }
  return z;
}

RemainderFit remainder_exponent(const AnalyticProbe& probe, const EtaPair& eta, double t0,
                                int levels) {
  RemainderFit fit;
  double t = t0;
  for (int k = 0; k < levels; ++k, t *= 0.5) {
    const cplx w = zero_track(probe, eta, t, t);
    fit.t.push_back(t);
    fit.remainder.push_back(std::abs(w - eta.eta1 * t - eta.eta2 * t));
  }
  bool exact = true;
  for (std::size_t k = 0; k < fit.t.size(); ++k)
    exact = exact && fit.remainder[k] <= 1e-14 * fit.t[k];
  fit.exact = exact;
  if (exact) {
    fit.exponent = std::numeric_limits<double>::infinity();
    return fit;
  }
  // Least-squares slope of log remainder against log t.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < fit.t.size(); ++k) {
    if (fit.remainder[k] <= 0.0) continue;
    const double x = std::log(fit.t[k]), y = std::log(fit.remainder[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  fit.exponent = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  return fit;
}

namespace {

// Solves omega(zeta) = target for real zeta by Newton on the 2x2 real system.
std::optional<std::pair<double, double>> invert(const AnalyticProbe& p, const EtaPair& eta,
                                                cplx target) {
  Eigen::Matrix2d a;
  a << eta.eta1.real(), eta.eta2.real(), eta.eta1.imag(), eta.eta2.imag();
  Eigen::Vector2d x = a.lu().solve(Eigen::Vector2d(target.real(), target.imag()));
  const double r = 1e-3 * p.radius;
  const double tol = 1e-13 * std::max(std::abs(target), 1e-300);
  for (int it = 0; it < 50; ++it) {
    cplx w;
    try {
      w = zero_track(p, EtaPair{eta.eta1, eta.eta2, eta.theta1, eta.theta2, eta.theta0, false},
                     x[0], x[1]);
    } catch (const ConvergenceError&) {
      return std::nullopt;
    }
    const cplx f = w - target;
    if (std::abs(f) <= std::max(tol, 1e-15)) return std::make_pair(x[0], x[1]);
    // Implicit derivatives d omega / d zeta_j = -Q_zeta_j / Q_z at the tracked zero.
    const cplx qz = cauchy_derivative([&](cplx z) { return p.eval(z, x[0], x[1]); }, w, r, 16);
    const cplx q1 = cauchy_derivative([&](cplx s) { return p.eval(w, s, x[1]); }, x[0], r, 16);
    const cplx q2 = cauchy_derivative([&](cplx s) { return p.eval(w, x[0], s); }, x[1], r, 16);
    const cplx d1 = -q1 / qz, d2 = -q2 / qz;
    Eigen::Matrix2d j;
    j << d1.real(), d2.real(), d1.imag(), d2.imag();
    x -= j.lu().solve(Eigen::Vector2d(f.real(), f.imag()));
    if (!x.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

CoverageResult sector_coverage(const AnalyticProbe& probe, double delta1, double delta2,
                               const CoverageOptions& o) {
  const EtaPair eta = eta_coefficients(probe);
  const AnalyticProbe p = ordered_probe(probe, eta);
  const EtaPair plain{eta.eta1, eta.eta2, eta.theta1, eta.theta2, eta.theta0, false};
  if (!(delta2 > 0.0) || 2.0 * delta2 >= eta.theta0)
    throw Error("sector_coverage: delta2 leaves an empty sector");

  CoverageResult res;
  res.angular = o.angular;
  res.radial = o.radial;

  // Half-plane containment of tracked zeros over a grid of the triangle T_delta1.
  const cplx rot = std::polar(1.0, -(eta.theta1 - o.delta0));
  for (int i = 1; i < o.angular && res.half_plane; ++i)
    for (int j = 1; i + j < o.angular; ++j) {
      const double z1 = delta1 * i / o.angular, z2 = delta1 * j / o.angular;
      if ((rot * zero_track(p, plain, z1, z2)).imag() <= 0.0) {
        res.half_plane = false;
        break;
      }
    }

  double d3 = std::min(1.0, 0.5 * probe.radius);
  std::optional<cplx> failure;
  for (int k = 0; k <= o.max_halvings; ++k, d3 *= 0.5) {
    failure.reset();
    std::size_t count = 0;
    const double lo = eta.theta1 + delta2, hi = eta.theta2 - delta2;
    for (int a = 0; a < o.angular && !failure; ++a) {
      const double phi = lo + (a + 0.5) / o.angular * (hi - lo);
      for (int r = 0; r < o.radial; ++r) {
        const double rho = d3 * std::pow(o.radial_span, (r + 0.5) / o.radial);
        const cplx target = std::polar(rho, phi);
        ++count;
        if (o.on_sample) o.on_sample(target);
        const auto zeta = invert(p, plain, target);
        if (!zeta || !(zeta->first > 0.0) || !(zeta->second > 0.0) ||
            !(zeta->first + zeta->second < delta1)) {
          failure = target;
          break;
        }
      }
    }
    res.samples += count;
    if (!failure) {
      res.covered = true;
      res.delta3 = d3;
      return res;
    }
  }
  res.counterexample = failure;
  return res;
}

}  // namespace qpar
