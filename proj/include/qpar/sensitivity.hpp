#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "qpar/eigensolve.hpp"

namespace qpar {

enum class DensityFormula {
  SigmaAware,  ///< (omega eps^2 + i sigma eps) E.E / denom
  Lossless,    ///< omega eps^2 E.E / denom
};

/// C1(p) = sum over cells of p g vol.
struct SensitivityDensity {
  std::vector<cplx> g;  ///< per cell, zero off the optimization region
  cplx denom;           ///< sum m E.E - w H.H over the whole grid
  cplx omega0;
  double cell_volume = 0;
  std::vector<std::uint8_t> support;
};

/// Throws DegenerateEigenpair if the pairing fails the simplicity check.
SensitivityDensity density(const EigenPair& pair, const DiscreteOperator& op,
                           DensityFormula formula = DensityFormula::SigmaAware,
                           double tol_pair = kDefaultPairTol);

/// Throws Error if p is nonzero off the optimization region.
cplx first_order_shift(const SensitivityDensity& dens, const Direction& p);

struct FdRow {
  double h = 0;
  cplx omega_h;
  cplx fd_slope;
  double abs_error = 0;
  double rel_error = 0;
  bool branch_jump = false;  ///< no eigenvalue inside the continuation radius; row discarded
};

struct FdTable {
  cplx c1;
  std::vector<FdRow> rows;
  void write(std::ostream& out) const;
};

struct FdOptions {
  EigenOptions eigen;
};

/// Forward differences (omega(h) - omega0)/h with 1/eps(h) = 1/eps + h p, each omega(h)
/// continued from omega0 inside radius 10 |h C1| + tolerance.
FdTable fd_validate(const MaterialScene& scene, const EigenPair& pair, const Direction& p,
                    std::span<const double> steps, const FdOptions& options = {});

}  // namespace qpar
