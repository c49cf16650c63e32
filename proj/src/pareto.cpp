#include "qpar/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

namespace qpar {

BoxLpSolution solve_box_lp(const BoxLp& lp) {
  const std::size_t n = lp.a.size();
  if (lp.b.size() != n || lp.lo.size() != n || lp.hi.size() != n)
    throw Error("box LP: inconsistent sizes");

  // At lambda = -inf every x sits where a - lambda b is positive.
  BoxLpSolution s;
  s.x.resize(n);
  std::vector<std::size_t> moving;
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lp.lo[i] > 0.0 || lp.hi[i] < 0.0 || lp.lo[i] > lp.hi[i])
      throw Error("box LP: bounds must bracket zero");
    if (lp.b[i] > 0.0)
      s.x[i] = lp.hi[i];
    else if (lp.b[i] < 0.0)
      s.x[i] = lp.lo[i];
    else
      s.x[i] = lp.a[i] > 0.0 ? lp.hi[i] : (lp.a[i] < 0.0 ? lp.lo[i] : 0.0);
    if (lp.b[i] != 0.0 && lp.hi[i] > lp.lo[i]) moving.push_back(i);
    h += s.x[i] * lp.b[i];
  }
  std::sort(moving.begin(), moving.end(), [&](std::size_t i, std::size_t j) {
    const double li = lp.a[i] / lp.b[i], lj = lp.a[j] / lp.b[j];
    return li < lj || (li == lj && i < j);
  });
  s.lambda = moving.empty() ? 0.0 : lp.a[moving.front()] / lp.b[moving.front()] - 1.0;

  if (lp.rhs > h) {
    s.feasible = false;
  } else {
    bool done = lp.rhs == h;
    for (std::size_t i : moving) {
      if (done) break;
      const double bi = lp.b[i];
      const double from = s.x[i], to = bi > 0.0 ? lp.lo[i] : lp.hi[i];
      const double next = h + (to - from) * bi;
      s.lambda = lp.a[i] / bi;
      if (next <= lp.rhs) {
        s.x[i] = from + (lp.rhs - h) / bi;
        h = lp.rhs;
        done = true;
      } else {
        s.x[i] = to;
        h = next;
      }
    }
    if (!done) {
      s.feasible = false;
      if (!moving.empty()) s.lambda = lp.a[moving.back()] / lp.b[moving.back()] + 1.0;
    }
  }
  s.constraint = 0.0;
  s.value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.constraint += lp.b[i] * s.x[i];
    s.value += lp.a[i] * s.x[i];
  }
  return s;
}

namespace {

struct FiberLp {
  std::vector<double> im, re, lo, hi;
  double scale = 0;
  bool zero = true;
};

FiberLp aggregate(const SensitivityDensity& dens, const MaterialScene& scene, double trust) {
  FiberLp f;
  for (const auto& fiber : scene.fibers()) {
    cplx s = 0.0;
    double lo = -trust, hi = trust;
    for (std::size_t c : fiber) {
      s += dens.g[c] * dens.cell_volume;
      const auto [l, u] = direction_box(scene, c);
      lo = std::max(lo, l);
      hi = std::min(hi, u);
    }
    f.zero = f.zero && s == 0.0;
    f.im.push_back(s.imag());
    f.re.push_back(s.real());
    f.lo.push_back(std::min(lo, 0.0));
    f.hi.push_back(std::max(hi, 0.0));
    f.scale += std::abs(s) * (f.hi.back() - f.lo.back());
  }
  return f;
}

void broadcast(const MaterialScene& scene, const std::vector<double>& x, StepPlan& plan) {
  const auto& fibers = scene.fibers();
  for (std::size_t f = 0; f < fibers.size(); ++f)
    for (std::size_t c : fibers[f]) plan.p.p[c] = x[f];
}

}  // namespace

StepPlan plan_step(const SensitivityDensity& dens, const MaterialScene& scene, double trust,
                   double re_shift, double stationary_tol) {
  const auto f = aggregate(dens, scene, trust);
  StepPlan plan;
  plan.kind = StepKind::Descent;
  plan.trust_step = trust;
  plan.p.p.assign(scene.grid().cell_count(), 0.0);
  plan.scale = f.scale;
  if (f.zero) {
    plan.stationary = true;
    plan.zero_density = true;
    return plan;
  }
  const auto sol = solve_box_lp({f.im, f.re, f.lo, f.hi, re_shift});
  plan.limited = !sol.feasible;
  broadcast(scene, sol.x, plan);
  plan.predicted_shift = first_order_shift(dens, plan.p);
  plan.value = plan.predicted_shift.imag();
  plan.stationary = plan.value <= stationary_tol * f.scale;
  return plan;
}

StepPlan plan_correction(const SensitivityDensity& dens, const MaterialScene& scene,
                         double trust, double re_shift) {
  const auto f = aggregate(dens, scene, trust);
  StepPlan plan;
  plan.kind = StepKind::Correction;
  plan.trust_step = trust;
  plan.p.p.assign(scene.grid().cell_count(), 0.0);
  plan.scale = f.scale;
  if (f.zero || re_shift == 0.0) {
    plan.stationary = true;
    plan.zero_density = f.zero;
    return plan;
  }
  const double sign = re_shift > 0.0 ? 1.0 : -1.0;
  std::vector<double> obj(f.re.size());
  for (std::size_t i = 0; i < obj.size(); ++i) obj[i] = sign * f.re[i];
  auto sol = solve_box_lp({obj, f.im, f.lo, f.hi, 0.0});
  const double reach = sol.value;
  if (!(reach > 0.0)) {
    plan.stationary = true;
    return plan;
  }
  const double shrink = std::min(1.0, std::abs(re_shift) / reach);
  plan.limited = shrink == 1.0;
  for (double& x : sol.x) x *= shrink;
  broadcast(scene, sol.x, plan);
  plan.predicted_shift = first_order_shift(dens, plan.p);
  plan.value = plan.predicted_shift.imag();
  return plan;
}

namespace {

std::optional<EigenPair> track(const MaterialScene& scene, const EigenPair& from, cplx predicted,
                               double radius, const EigenOptions& base) {
  const auto op = DiscreteOperator::assemble(scene);
  EigenOptions eo = base;
  eo.start = &from.psi;
  try {
    auto found = find_eigs(op, {predicted, radius, 1}, eo);
    if (found.empty()) return std::nullopt;
    return std::move(found.front());
  } catch (const ConvergenceError& e) {
    spdlog::debug("track: {}", e.what());
    return std::nullopt;
  }
}

double tracking_radius(const EigenPair& pair, cplx shift, double tol) {
  return 3.0 * std::abs(shift) + 1e3 * tol * (1.0 + std::abs(pair.omega));
}

}  // namespace

StepResult apply_step(const MaterialScene& scene, const EigenPair& pair, const StepPlan& plan,
                      double alpha, const LineSearchOptions& options) {
  StepResult out{false, scene, pair, 0.0, 0, 0};
  if (plan.stationary) return out;
  const double d0 = std::abs(pair.omega.real() - alpha);
  double t = 1.0;
  for (int k = 0; k <= options.max_halvings; ++k, t *= 0.5) {
    ++out.trials;
    auto step = apply_inverse_step(scene, plan.p, t);
    if (step.clipped > 0) spdlog::debug("apply_step: {} cells clipped at t = {}", step.clipped, t);
    const cplx pred = pair.omega + t * plan.predicted_shift;
    auto next = track(step.scene, pair, pred, tracking_radius(pair, t * plan.predicted_shift,
                                                              options.eigen.tol),
                      options.eigen);
    if (!next) {
      spdlog::debug("apply_step: continuation lost the branch at t = {}", t);
      continue;
    }
    const double d1 = std::abs(next->omega.real() - alpha);
    bool ok;
    if (plan.kind == StepKind::Descent) {
      ok = next->gamma() < pair.gamma() - options.c1 * t * std::max(plan.value, 0.0) &&
           next->gamma() < pair.gamma() && d1 <= options.drift_budget;
    } else {
      ok = d1 <= d0 - options.c1 * t * std::abs(plan.predicted_shift.real()) && d1 < d0;
    }
    if (ok) {
      out.accepted = true;
      out.scene = std::move(step.scene);
      out.pair = std::move(*next);
      out.t = t;
      out.clipped = step.clipped;
      return out;
    }
  }
  return out;
}

namespace {

double inverse_range(const MaterialScene& scene) {
  const auto& f = scene.family();
  return 1.0 / f.eps_minus - 1.0 / f.eps_plus;
}

struct PolishOutcome {
  MaterialScene scene;
  EigenPair pair;
  bool ok = false;
};

// Active-set Newton on the first-order optimality system. Unknowns are 1/eps on the fibers
// strictly inside the box and the rotation psi; equations are Im(e^{i psi} w_j) = 0 on those
// fibers and Re omega = alpha.
PolishOutcome polish(const MaterialScene& scene0, const EigenPair& pair0, double alpha,
                     const OptimizeOptions& o, const EigenOptions& eo) {
  PolishOutcome out{scene0, pair0, false};
  const auto& fam = scene0.family();
  const auto& fibers = scene0.fibers();
  const double umin = 1.0 / fam.eps_plus, umax = 1.0 / fam.eps_minus;
  const double fd = 1e-7 * inverse_range(scene0);

  auto generators = [&](const MaterialScene& s, const EigenPair& p) {
    return cone_generators(p, DiscreteOperator::assemble(s));
  };
  auto fiber_u = [&](const MaterialScene& s, std::size_t f) { return 1.0 / s.eps()[fibers[f][0]]; };
  auto with_u = [&](const MaterialScene& s, const std::vector<std::size_t>& set,
                    const std::vector<double>& u) {
    auto eps = s.eps();
    for (std::size_t j = 0; j < set.size(); ++j)
      for (std::size_t c : fibers[set[j]]) eps[c] = 1.0 / u[j];
    return s.with_eps(std::move(eps));
  };

  auto gens = generators(out.scene, out.pair);
  double wscale = 0.0;
  for (const auto& g : gens) wscale = std::max(wscale, std::abs(g.w));
  if (wscale == 0.0) return out;

  std::vector<std::uint8_t> active(fibers.size(), 0), pinned(fibers.size(), 0);
  for (std::size_t f = 0; f < fibers.size(); ++f) active[f] = gens[f].up && gens[f].down;

  // Rotation minimizing the squared defect over the active set, then the sign that agrees
  // with most bound fibers.
  auto best_psi = [&](const std::vector<ConeGenerator>& g) {
    cplx s2 = 0.0;
    for (std::size_t f = 0; f < g.size(); ++f)
      if (active[f] && g[f].w != 0.0) s2 += g[f].w * g[f].w / std::abs(g[f].w);
    double psi = s2 == 0.0 ? 0.0 : -0.5 * std::arg(s2);
    auto agree = [&](double ps) {
      int n = 0;
      for (const auto& gf : g) {
        const double phi = (std::polar(1.0, ps) * gf.w).imag();
        if (gf.up != gf.down) n += (gf.up ? phi > 0.0 : phi < 0.0) ? 1 : -1;
      }
      return n;
    };
    if (agree(psi + std::numbers::pi) > agree(psi)) psi += std::numbers::pi;
    return psi;
  };
  double psi = best_psi(gens);

  for (int it = 0; it < o.polish_iterations; ++it) {
    // Bound fibers whose sign disagrees with psi join the active set.
    bool changed = false;
    for (std::size_t f = 0; f < fibers.size(); ++f) {
      if (active[f] || pinned[f]) continue;
      const double phi = (std::polar(1.0, psi) * gens[f].w).imag() / wscale;
      if ((gens[f].up && !gens[f].down && phi < -o.polish_tol) ||
          (gens[f].down && !gens[f].up && phi > o.polish_tol)) {
        active[f] = 1;
        changed = true;
      }
    }
    std::vector<std::size_t> set;
    for (std::size_t f = 0; f < fibers.size(); ++f)
      if (active[f]) set.push_back(f);
    if (set.empty()) {
      // Free the fiber closest to switching so Re omega can still be adjusted.
      std::size_t best = 0;
      double bv = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < fibers.size(); ++f) {
        const double v = std::abs((std::polar(1.0, psi) * gens[f].w).imag());
        if (v < bv) bv = v, best = f;
      }
      active[best] = 1;
      set.push_back(best);
      changed = true;
    }
    if (set.size() > o.polish_max_unknowns) {
      spdlog::info("polish: {} active fibers exceed the limit; skipped", set.size());
      return out;
    }
    if (changed) psi = best_psi(gens);

    const std::size_t k = set.size();
    auto residual = [&](const std::vector<ConeGenerator>& g, const EigenPair& p, double ps) {
      Eigen::VectorXd r(Eigen::Index(k + 1));
      for (std::size_t j = 0; j < k; ++j)
        r[Eigen::Index(j)] = (std::polar(1.0, ps) * g[set[j]].w).imag() / wscale;
      r[Eigen::Index(k)] = (p.omega.real() - alpha) / alpha;
      return r;
    };
    const Eigen::VectorXd r0 = residual(gens, out.pair, psi);
    spdlog::debug("polish {}: {} unknowns, |F| = {:.3e}", it, k + 1, r0.lpNorm<Eigen::Infinity>());
    if (r0.lpNorm<Eigen::Infinity>() <= o.polish_tol && !changed) {
      out.ok = true;
      return out;
    }

    std::vector<double> u(k);
    for (std::size_t j = 0; j < k; ++j) u[j] = fiber_u(out.scene, set[j]);
    Eigen::MatrixXd jac(Eigen::Index(k + 1), Eigen::Index(k + 1));
    for (std::size_t j = 0; j < k; ++j) {
      auto up = u;
      const double step = u[j] + fd <= umax ? fd : -fd;
      up[j] += step;
      const auto s = with_u(out.scene, set, up);
      auto p = track(s, out.pair, out.pair.omega, 1e-3 * (1.0 + std::abs(out.pair.omega)), eo);
      if (!p) return out;
      jac.col(Eigen::Index(j)) = (residual(generators(s, *p), *p, psi) - r0) / step;
    }
    for (std::size_t j = 0; j < k; ++j)
      jac(Eigen::Index(j), Eigen::Index(k)) =
          (std::polar(1.0, psi) * gens[set[j]].w).real() / wscale;
    jac(Eigen::Index(k), Eigen::Index(k)) = 0.0;
    const Eigen::VectorXd dx = jac.colPivHouseholderQr().solve(-r0);

    // Damped update with the box enforced; fibers pushed onto a bound leave the active set.
    double lambda = 1.0;
    bool accepted = false;
    for (int d = 0; d < 8 && !accepted; ++d, lambda *= 0.5) {
      auto un = u;
      std::vector<int> hit(k, 0);
      for (std::size_t j = 0; j < k; ++j) {
        un[j] += lambda * dx[Eigen::Index(j)];
        if (un[j] <= umin) un[j] = umin, hit[j] = 1;
        if (un[j] >= umax) un[j] = umax, hit[j] = 1;
      }
      const double psn = psi + lambda * dx[Eigen::Index(k)];
      auto s = with_u(out.scene, set, un);
      auto p = track(s, out.pair, out.pair.omega, 1e-2 * (1.0 + std::abs(out.pair.omega)), eo);
      if (!p) continue;
      auto g = generators(s, *p);
      const Eigen::VectorXd r1 = residual(g, *p, psn);
      if (r1.norm() < r0.norm() || d == 7) {
        out.scene = std::move(s);
        out.pair = std::move(*p);
        gens = std::move(g);
        psi = psn;
        for (std::size_t j = 0; j < k; ++j)
          if (hit[j]) active[set[j]] = 0, pinned[set[j]] = 1;
        accepted = true;
      }
    }
    if (!accepted) return out;
  }
  return out;
}

SwitchingVariant pick_variant(const MaterialScene& scene, const OptimizeOptions& o) {
  return o.variant.value_or(default_variant(scene.family().kind));
}

}  // namespace

ParetoPoint optimize_from(const MaterialScene& scene0, const EigenPair& pair0, double alpha,
                          const OptimizeOptions& o) {
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  EigenOptions eo;
  eo.tol = o.eigen_tol;
  eo.seed = o.seed;
  LineSearchOptions ls;
  ls.c1 = o.c1;
  ls.max_halvings = o.max_halvings;
  ls.drift_budget = o.step_drift_rel * alpha;
  const double drift_budget = o.drift_budget_rel * alpha;
  ls.eigen = eo;
  const double alpha_tol = o.alpha_tol_rel * alpha;
  const double range = inverse_range(scene0);
  const double trust_max = range;
  double trust = o.trust_initial_rel * range;

  MaterialScene scene = scene0;
  EigenPair pair = pair0;
  std::vector<double> trace;
  std::string status = "max-iterations";
  int it = 0;
  for (; it < o.max_iterations; ++it) {
    const auto op = DiscreteOperator::assemble(scene);
    SensitivityDensity dens;
    try {
      dens = density(pair, op);
    } catch (const DegenerateEigenpair&) {
      status = "degenerate";
      break;
    }
    const double delta = alpha - pair.omega.real();
    auto shrink = [&] {
      trust *= 0.25;
      return trust < o.trust_min_rel * range;
    };

    if (std::abs(delta) > drift_budget) {
      // Approach: move Re omega onto alpha, descending where the constraint leaves room.
      auto plan = plan_step(dens, scene, trust, delta, o.stationary_tol);
      plan.kind = StepKind::Correction;
      plan.stationary = plan.zero_density || plan.predicted_shift.real() * delta <= 0.0;
      if (plan.stationary) {
        status = plan.zero_density ? "zero-density" : "alpha-unreachable";
        break;
      }
      auto res = apply_step(scene, pair, plan, alpha, ls);
      spdlog::debug("iter {}: approach omega = {:.12f}{:+.12f}i, trust = {:.3e}, t = {}", it,
                    pair.omega.real(), pair.omega.imag(), trust, res.accepted ? res.t : 0.0);
      if (res.accepted) {
        scene = std::move(res.scene);
        pair = std::move(res.pair);
        trust = res.t == 1.0 ? std::min(2.0 * trust, trust_max) : res.t * trust;
      } else if (shrink()) {
        status = "step-underflow";
        break;
      }
      continue;
    }

    if (trace.empty()) trace.push_back(pair.gamma());
    const auto plan = plan_step(dens, scene, trust, 0.0, o.stationary_tol);
    if (plan.zero_density) {
      status = "zero-density";
      break;
    }
    if (plan.stationary) {
      status = "stationary";
      break;
    }
    auto res = apply_step(scene, pair, plan, alpha, ls);
    if (!res.accepted) {
      spdlog::debug("iter {}: descent rejected, trust = {:.3e}", it, trust);
      if (shrink()) {
        status = "step-underflow";
        break;
      }
      continue;
    }
    // Correction steps hold Gamma fixed to first order; the corrected iterate must still
    // improve on the previous one.
    MaterialScene cs = std::move(res.scene);
    EigenPair cp = std::move(res.pair);
    for (int k = 0; k < o.corrections; ++k) {
      const double d = alpha - cp.omega.real();
      if (std::abs(d) <= alpha_tol) break;
      SensitivityDensity cd;
      try {
        cd = density(cp, DiscreteOperator::assemble(cs));
      } catch (const DegenerateEigenpair&) {
        break;
      }
      const auto cplan = plan_correction(cd, cs, trust, d);
      auto cres = apply_step(cs, cp, cplan, alpha, ls);
      if (!cres.accepted) break;
      cs = std::move(cres.scene);
      cp = std::move(cres.pair);
    }
    spdlog::debug("iter {}: omega = {:.12f}{:+.12f}i -> {:.12f}{:+.12f}i, trust = {:.3e}, "
                  "value = {:.3e}, t = {}",
                  it, pair.omega.real(), pair.omega.imag(), cp.omega.real(), cp.omega.imag(),
                  trust, plan.value, res.t);
    if (cp.gamma() < pair.gamma() && std::abs(alpha - cp.omega.real()) <= drift_budget) {
      scene = std::move(cs);
      pair = std::move(cp);
      trace.push_back(pair.gamma());
      // The next program is confined to the step length that worked.
      trust = res.t == 1.0 ? std::min(2.0 * trust, trust_max) : res.t * trust;
    } else if (shrink()) {
      status = "step-underflow";
      break;
    }
  }

  if (o.polish) {
    auto pol = polish(scene, pair, alpha, o, eo);
    spdlog::debug("polish: {}", pol.ok ? "converged" : "incomplete");
    scene = std::move(pol.scene);
    pair = std::move(pol.pair);
  }

  const auto variant = pick_variant(scene, o);
  ELReport report;
  try {
    auto op = DiscreteOperator::assemble(scene);
    auto v = verify_el(pair, op, variant, o.dead_band_rel);
    const MaterialScene rounded =
        bang_bang_round(scene, v.phi.phi, o.dead_band_rel * [&] {
          double m = 0.0;
          for (std::size_t c : scene.opt_cells()) m = std::max(m, std::abs(v.phi.phi[c]));
          return m;
        }());
    if (rounded.eps() != scene.eps()) {
      auto next = track(rounded, pair, pair.omega, 0.5 * (1.0 + pair.gamma()), eo);
      if (!next) throw ConvergenceError("final re-solve after rounding lost the branch");
      scene = rounded;
      pair = std::move(*next);
      op = DiscreteOperator::assemble(scene);
      v = verify_el(pair, op, variant, o.dead_band_rel);
    }
    report = v.report;
    pair = v.phased;
  } catch (const NotFirstOrderOptimal& e) {
    report.residual = std::numeric_limits<double>::quiet_NaN();
    report.undefined = true;
    report.variant = variant;
    status += "; " + std::string(e.what());
  }

  const bool converged = std::isfinite(report.residual) && report.residual <= o.el_tol &&
                         std::abs(pair.omega.real() - alpha) <= alpha_tol;
  return ParetoPoint{alpha,  pair.gamma(), std::move(scene),    std::move(pair), report,
                     it,     converged,    std::move(trace),    std::move(status)};
}

ParetoPoint optimize(const MaterialScene& scene0, double alpha, const OptimizeOptions& o) {
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  const auto op = DiscreteOperator::assemble(scene0);
  EigenOptions eo;
  eo.tol = o.eigen_tol;
  eo.seed = o.seed;
  const SearchWindow win{o.window_center.value_or(cplx(alpha, 0.0)), o.window_radius, 4};
  auto found = find_eigs(op, win, eo);
  if (found.empty())
    throw NotAchievable(alpha, "no eigenvalue in the search window for alpha = " + std::to_string(alpha));
  auto best = std::min_element(found.begin(), found.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.omega.real() - alpha) < std::abs(b.omega.real() - alpha);
  });
  return optimize_from(scene0, *best, alpha, o);
}

std::vector<FrontierEntry> sweep_frontier(const MaterialScene& scene0,
                                          const std::vector<double>& alphas,
                                          const OptimizeOptions& o) {
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i - 1])) throw Error("alphas must be strictly increasing");
  std::vector<FrontierEntry> out;
  const ParetoPoint* prev = nullptr;
  for (double alpha : alphas) {
    FrontierEntry e;
    e.alpha = alpha;
    try {
      if (prev) {
        e.point = optimize_from(prev->scene, prev->pair, alpha, o);
      } else {
        e.point = optimize(scene0, alpha, o);
      }
      e.status = "ok";
    } catch (const NotAchievable&) {
      e.status = "not-achievable";
    }
    out.push_back(std::move(e));
    if (out.back().point) prev = &*out.back().point;
  }
  return out;
}

}  // namespace qpar
