#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qpar {

using cplx = std::complex<double>;

/// Q(z; zeta1, zeta2), analytic on the polydisc of the given radius, with Q(0; 0, 0) = 0.
struct AnalyticProbe {
  std::string label;
  std::function<cplx(cplx z, cplx zeta1, cplx zeta2)> eval;
  double radius = 1.0;
};

/// Registered probes: "linear", "swapped", "sin", "quadratic".
std::vector<std::string> probe_labels();
/// Throws Error for an unknown label.
AnalyticProbe make_probe(const std::string& label);

/// Derivative of a scalar analytic function at z by the mean over a circle of radius r.
cplx cauchy_derivative(const std::function<cplx(cplx)>& f, cplx z, double r, int points = 32);

/// Largest relative mismatch between real-step and imaginary-step centered differences
/// over random points of the half-radius polydisc, in each of the three variables.
double analyticity_defect(const AnalyticProbe& probe, std::uint64_t seed = 1, int points = 8);

struct EtaPair {
  cplx eta1, eta2;        ///< after ordering
  double theta1 = 0, theta2 = 0, theta0 = 0;
  bool swapped = false;   ///< the probe's zeta labels were exchanged to order the angles
};

/// eta_j = -Q_zeta_j / Q_z at the origin, ordered so that theta2 = theta1 + theta0 with
/// theta0 in (0, pi). Throws Error if the zero is not simple, an eta vanishes, or the two
/// directions are parallel.
EtaPair eta_coefficients(const AnalyticProbe& probe);

/// Probe with its zeta labels in the order chosen by eta_coefficients.
AnalyticProbe ordered_probe(const AnalyticProbe& probe, const EtaPair& eta);

/// Zero of Q(.; zeta) continued from 0, by Newton from the first-order prediction with a
/// ray homotopy as fallback. Throws ConvergenceError if tracking fails.
cplx zero_track(const AnalyticProbe& probe, const EtaPair& eta, double zeta1, double zeta2,
                double tol = 1e-13);

struct RemainderFit {
  double exponent = 0;  ///< log-log slope of |omega - omega1| against t on zeta = (t, t)
  bool exact = false;   ///< the remainder vanished to rounding at every level
  std::vector<double> t, remainder;
};

RemainderFit remainder_exponent(const AnalyticProbe& probe, const EtaPair& eta, double t0 = 0.05,
                                int levels = 8);

struct CoverageOptions {
  int angular = 32;
  int radial = 16;
  double radial_span = 1e-3;  ///< innermost radius as a fraction of delta3
  int max_halvings = 30;
  double delta0 = 1e-3;       ///< slack of the half-plane check
  /// Called with every sector sample before it is inverted.
  std::function<void(cplx)> on_sample;
};

struct CoverageResult {
  bool covered = false;
  double delta3 = 0;                 ///< largest 2^-k that passed
  std::optional<cplx> counterexample;
  std::size_t samples = 0;
  bool half_plane = true;            ///< every tracked zero over T_delta1 lay in the half-plane
  int angular = 0, radial = 0;
};

/// Checks that the open sector theta1 + delta2 < arg z < theta2 - delta2, |z| < delta3, is
/// reached by zeros with zeta in the open triangle T_delta1.
CoverageResult sector_coverage(const AnalyticProbe& probe, double delta1, double delta2,
                               const CoverageOptions& options = {});

}  // namespace qpar
