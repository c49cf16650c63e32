#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "qpar/dispersion1d.hpp"
#include "qpar/maxwell_op.hpp"

namespace qpar {

struct EigenPair {
  cplx omega;
  Field psi;
  cplx pairing;         ///< sum m E.E - w H.H, the unconjugated <Psi, Psi*>.
  double residual = 0;  ///< ||M psi - omega psi|| / ||psi|| in the energy norm.
  double norm_sq = 1;   ///< ||psi||^2 in the energy norm.

  double gamma() const noexcept { return -omega.imag(); }
  double q_factor() const noexcept { return std::abs(omega.real()) / (-2.0 * omega.imag()); }
};

struct SearchWindow {
  cplx center;
  double radius = 1.0;
  int count = 1;
};

struct EigenOptions {
  double tol = 1e-9;
  std::uint64_t seed = 1;
  int max_basis = 40;
  int max_iterations = 600;
  /// Optional starting vector, e.g. the eigenfield of a nearby scene.
  const Field* start = nullptr;
};

/// Solves (M - mu) x = b for a fixed shift mu by elimination of H.
class ShiftInvert {
 public:
  ShiftInvert(const DiscreteOperator& op, cplx shift);
  ~ShiftInvert();
  ShiftInvert(ShiftInvert&&) noexcept;
  ShiftInvert& operator=(ShiftInvert&&) noexcept;

  cplx shift() const noexcept { return mu_; }
  Field solve(const Field& b) const;

 private:
  struct Impl;
  const DiscreteOperator* op_;
  cplx mu_;
  std::unique_ptr<Impl> impl_;
};

/// Eigenvalues nearest the window center, filtered to the window and sorted by distance.
/// Throws ConvergenceError if the iteration stalls.
std::vector<EigenPair> find_eigs(const DiscreteOperator& op, const SearchWindow& window,
                                 const EigenOptions& options = {});

/// Rescales to unit energy norm with a real positive pairing and fills the derived fields.
EigenPair normalize_pair(const DiscreteOperator& op, cplx omega, Field psi);

enum class Simplicity { Simple, DegenerateOrIllConditioned };

inline constexpr double kDefaultPairTol = 1e-8;

Simplicity simplicity_check(const EigenPair& pair, double tol_pair = kDefaultPairTol);

struct PhaseFix {
  EigenPair pair;
  double theta = 0;  ///< rotation applied, in (-pi/2, pi/2].
};

/// Rotates psi so the first-order cone {sum p eps^2 E.E vol : p admissible} is centered on
/// the positive imaginary axis. Throws NotFirstOrderOptimal if the cone opens wider than a
/// half-plane by more than angle_tol.
PhaseFix fix_phase(const EigenPair& pair, const DiscreteOperator& op, double angle_tol = 1e-8);

/// Per-fiber cone generators sum eps^2 vol (E.E); the sign flags say which of +w, -w are
/// admissible.
struct ConeGenerator {
  cplx w;
  bool up;
  bool down;
};
std::vector<ConeGenerator> cone_generators(const EigenPair& pair, const DiscreteOperator& op);

struct Rect {
  double re_min, re_max, im_min, im_max;
};

struct Root1D {
  cplx omega;
  int multiplicity = 1;
};

/// Argument-principle count of zeros of dispersion_1d inside rect. Throws BoundaryZero
/// when a zero lies on (or numerically at) the contour.
int winding_number(const LayeredProfile1D& profile, const Rect& rect);

/// All zeros inside rect, refined to |f| <= 1e-12. Throws BoundaryZero if the outer
/// contour passes through a zero; the caller should retry with a perturbed rectangle.
std::vector<Root1D> roots_1d(const LayeredProfile1D& profile, const Rect& rect);

/// Newton refinement of a single zero of dispersion_1d.
std::optional<cplx> refine_root_1d(const LayeredProfile1D& profile, cplx guess,
                                   double ftol = 1e-12, int max_iter = 60);

void write_eigenpair(const std::filesystem::path& path, const EigenPair& pair,
                     const MaterialScene& scene);
EigenPair read_eigenpair(const std::filesystem::path& path, const DiscreteOperator& op);

}  // namespace qpar
