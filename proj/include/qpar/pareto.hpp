#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qpar/el_verify.hpp"
#include "qpar/sensitivity.hpp"

namespace qpar {

/// maximize sum a x  subject to  sum b x = rhs,  lo <= x <= hi  (lo <= 0 <= hi).
struct BoxLp {
  std::vector<double> a, b, lo, hi;
  double rhs = 0;
};

struct BoxLpSolution {
  std::vector<double> x;
  double lambda = 0;  ///< multiplier of the equality; x is at a bound wherever a - lambda b != 0
  double value = 0;
  double constraint = 0;  ///< sum b x actually reached
  bool feasible = true;   ///< false if rhs lies outside the reachable range; x is then the extreme
};

/// Exact solution by sorting the breakpoints a/b of the Lagrangian.
BoxLpSolution solve_box_lp(const BoxLp& lp);

enum class StepKind {
  Descent,     ///< lowers Gamma along the tangent of Re omega = alpha
  Correction,  ///< moves Re omega toward alpha with no first-order change of Gamma
};

struct StepPlan {
  StepKind kind = StepKind::Descent;
  Direction p;
  cplx predicted_shift;      ///< first-order shift of omega along p
  double trust_step = 0;     ///< L-infinity radius the plan was confined to
  double value = 0;          ///< Im predicted_shift, the predicted decrease of Gamma
  double scale = 0;          ///< size of the linear model, used by the stationarity test
  bool stationary = false;   ///< no strictly descending admissible direction
  bool zero_density = false;
  bool limited = false;      ///< the requested Re shift was out of reach; p is the extreme
};

/// Transposed program: maximize sign(re_shift) Re C1(p) subject to Im C1(p) = 0 and
/// |p| <= trust, then shortened so the predicted Re shift does not exceed re_shift.
StepPlan plan_correction(const SensitivityDensity& dens, const MaterialScene& scene,
                         double trust, double re_shift);

/// Maximizes Im C1(p) subject to Re C1(p) = re_shift over admissible fiber-constant p with
/// |p| <= trust. Stationary if the optimum is <= stationary_tol * scale.
StepPlan plan_step(const SensitivityDensity& dens, const MaterialScene& scene,
                   double trust = std::numeric_limits<double>::infinity(), double re_shift = 0.0,
                   double stationary_tol = 1e-10);

struct LineSearchOptions {
  double c1 = 0.1;
  int max_halvings = 8;
  /// Absolute bound on |Re omega - alpha| after a descent step, before correction.
  double drift_budget = std::numeric_limits<double>::infinity();
  EigenOptions eigen;
};

struct StepResult {
  bool accepted = false;
  MaterialScene scene;
  EigenPair pair;
  double t = 0;
  std::size_t clipped = 0;
  int trials = 0;
};

/// Backtracks t = 1, 1/2, ... along the plan with warm-started re-solves. A descent step must
/// reduce Gamma by c1 t value and stay inside the drift budget; a correction step must reduce
/// |Re omega - alpha| by c1 t |Re predicted|. A stationary plan is a no-op.
StepResult apply_step(const MaterialScene& scene, const EigenPair& pair, const StepPlan& plan,
                      double alpha, const LineSearchOptions& options = {});

struct OptimizeOptions {
  double eigen_tol = 1e-11;
  std::uint64_t seed = 1;
  int max_iterations = 300;
  double c1 = 0.1;
  int max_halvings = 6;
  int corrections = 2;  ///< correction steps after each descent step
  double drift_budget_rel = 1e-4;  ///< bound on |Re omega - alpha| of accepted iterates
  double step_drift_rel = 1e-2;    ///< bound on the drift of a raw descent step
  double alpha_tol_rel = 1e-6;
  double el_tol = 1e-6;
  double dead_band_rel = 1e-8;
  double trust_initial_rel = 0.25;  ///< fraction of the widest 1/eps range
  double trust_min_rel = 1e-7;
  double stationary_tol = 1e-10;
  std::optional<cplx> window_center;  ///< default: alpha on the real axis
  double window_radius = 1.0;
  std::optional<SwitchingVariant> variant;  ///< default: matches the family
  bool polish = true;
  int polish_iterations = 40;
  std::size_t polish_max_unknowns = 64;
  double polish_tol = 1e-12;
};

struct ParetoPoint {
  double alpha = 0;
  double gamma = 0;
  MaterialScene scene;
  EigenPair pair;
  ELReport el_report;
  int iterations = 0;
  bool converged = false;
  std::vector<double> gamma_trace;  ///< Gamma of accepted iterates after drift correction
  std::string status;               ///< why the descent loop stopped
};

/// Throws NotAchievable if no eigenvalue lies in the initial search window.
ParetoPoint optimize(const MaterialScene& scene0, double alpha, const OptimizeOptions& options = {});

/// Optimization started from a known eigenpair of scene0.
ParetoPoint optimize_from(const MaterialScene& scene0, const EigenPair& pair0, double alpha,
                          const OptimizeOptions& options = {});

struct FrontierEntry {
  double alpha = 0;
  std::optional<ParetoPoint> point;
  std::string status;  ///< "ok" or "not-achievable"
};

/// Runs optimize for increasing alphas, each started from the previous optimized scene.
std::vector<FrontierEntry> sweep_frontier(const MaterialScene& scene0,
                                          const std::vector<double>& alphas,
                                          const OptimizeOptions& options = {});

}  // namespace qpar
