#pragma once

#include <span>
#include <string>
#include <vector>

#include "qpar/eigensolve.hpp"

namespace qpar {

enum class SwitchingVariant { Full3D, Crystal2D, Crystal1D, SigmaAware };

std::string to_string(SwitchingVariant v);
SwitchingVariant switching_variant_from_string(const std::string& s);
bool compatible(SwitchingVariant v, FamilyKind kind);
SwitchingVariant default_variant(FamilyKind kind);

/// Switching function per cell. On the optimization region it follows the variant;
/// on the outer region it holds the pointwise value (scaled by the fiber measure for
/// the integral variants) so the Euler-Lagrange residual can be formed over the whole grid.
struct SwitchingField {
  std::vector<double> phi;
  SwitchingVariant variant = SwitchingVariant::Full3D;
  /// Same formula with |.| in place of Im; phi below kVacuousRel * scale is roundoff.
  double scale = 0;
};

inline constexpr double kVacuousRel = 1e-12;

/// (E.E) per cell, the mean of the squared edge values.
std::vector<cplx> cell_products(const EigenPair& pair, const DiscreteOperator& op);

/// Throws Error if the variant does not match the scene's family.
SwitchingField switching(const EigenPair& pair, const DiscreteOperator& op,
                         SwitchingVariant variant);

struct ElResidual {
  double value = 0;
  bool vacuous = false;    ///< phi vanishes up to roundoff
  bool undefined = false;  ///< zero normalizer with a zero field; value is NaN
};

/// Normalized defect of the whole-domain Euler-Lagrange equation
///   |phi| curl curl E - omega^2 ((e+ + e-)/2 |phi| + (e+ - e-)/2 phi) E - i omega sigma |phi| E.
ElResidual el_residual(const EigenPair& pair, const DiscreteOperator& op, const SwitchingField& phi);

struct StructureMetrics {
  double singular_fraction = 0;
  double bang_bang_fraction = 0;
};

/// Singular cells have |phi| <= dead_band_rel * max |phi|. A cell outside the band agrees
/// with the bang-bang rule if eps = eps_plus where phi > 0 and eps = eps_minus where phi < 0.
StructureMetrics structure_metrics(const MaterialScene& scene, std::span<const double> phi,
                                   double dead_band_rel = 1e-10);

struct ELReport {
  double residual = 0;
  bool vacuous = false;
  bool undefined = false;
  double singular_fraction = 0;
  double bang_bang_fraction = 0;
  double phase_theta = 0;
  SwitchingVariant variant = SwitchingVariant::Full3D;
};

struct VerifyResult {
  ELReport report;
  EigenPair phased;  ///< the eigenpair after fix_phase
  SwitchingField phi;
};

/// fix_phase, switching, residual and structure metrics in one pass. With
/// apply_phase_fix = false the stored phase is used as is.
VerifyResult verify_el(const EigenPair& pair, const DiscreteOperator& op, SwitchingVariant variant,
                       double dead_band_rel = 1e-10, double angle_tol = 1e-8,
                       bool apply_phase_fix = true);

}  // namespace qpar
