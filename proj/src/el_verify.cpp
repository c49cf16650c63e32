#include "qpar/el_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpar {

std::string to_string(SwitchingVariant v) {
  switch (v) {
    case SwitchingVariant::Full3D: return "full3d";
    case SwitchingVariant::Crystal2D: return "crystal2d";
    case SwitchingVariant::Crystal1D: return "crystal1d";
    case SwitchingVariant::SigmaAware: return "sigma";
  }
  return "unknown";
}

SwitchingVariant switching_variant_from_string(const std::string& s) {
  if (s == "full3d") return SwitchingVariant::Full3D;
  if (s == "crystal2d") return SwitchingVariant::Crystal2D;
  if (s == "crystal1d") return SwitchingVariant::Crystal1D;
  if (s == "sigma") return SwitchingVariant::SigmaAware;
  throw Error("unknown switching variant '" + s + "'");
}

bool compatible(SwitchingVariant v, FamilyKind kind) {
  switch (v) {
    case SwitchingVariant::Full3D:
    case SwitchingVariant::SigmaAware: return kind == FamilyKind::Full3D;
    case SwitchingVariant::Crystal2D: return kind == FamilyKind::Cylinder2D;
    case SwitchingVariant::Crystal1D: return kind == FamilyKind::Slab1D;
  }
  return false;
}

SwitchingVariant default_variant(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Cylinder2D: return SwitchingVariant::Crystal2D;
    case FamilyKind::Slab1D: return SwitchingVariant::Crystal1D;
    case FamilyKind::Full3D: break;
  }
  return SwitchingVariant::Full3D;
}

std::vector<cplx> cell_products(const EigenPair& pair, const DiscreteOperator& op) {
  const Eigen::VectorXcd sq = op.cell_square(pair.psi.e);
  const double vol = op.scene().grid().cell_volume();
  std::vector<cplx> out(std::size_t(sq.size()));
  for (Eigen::Index c = 0; c < sq.size(); ++c) out[std::size_t(c)] = sq[c] / vol;
  return out;
}

SwitchingField switching(const EigenPair& pair, const DiscreteOperator& op,
                         SwitchingVariant variant) {
  const auto& scene = op.scene();
  if (!compatible(variant, scene.family().kind))
    throw Error("switching variant " + to_string(variant) + " does not match family " +
                to_string(scene.family().kind));
  const auto ee = cell_products(pair, op);
  const auto& g = scene.grid();
  const std::size_t n = g.cell_count();

  SwitchingField out{std::vector<double>(n, 0.0), variant};
  double measure = 1.0;  // fiber measure of the integral variants
  if (variant == SwitchingVariant::Crystal2D)
    measure = (scene.family().c_plus - scene.family().c_minus) * g.spacing(2);
  else if (variant == SwitchingVariant::Crystal1D) {
    std::size_t cells = 0;
    for (auto m : scene.family().cross_section) cells += m ? 1 : 0;
    measure = double(cells) * g.spacing(0) * g.spacing(1);
  }

  for (std::size_t c = 0; c < n; ++c) {
    cplx v = ee[c];
    if (variant == SwitchingVariant::SigmaAware) {
      const double e = scene.eps()[c];
      v *= e * e + cplx(0.0, scene.sigma()[c] * e) / pair.omega;
    }
    out.phi[c] = measure * v.imag();
    out.scale = std::max(out.scale, measure * std::abs(v));
  }

  if (variant == SwitchingVariant::Crystal2D || variant == SwitchingVariant::Crystal1D) {
    const double dl = variant == SwitchingVariant::Crystal2D ? g.spacing(2)
                                                              : g.spacing(0) * g.spacing(1);
    for (const auto& fiber : scene.fibers()) {
      double sum = 0.0;
      double mag = 0.0;
      for (std::size_t c : fiber) {
        sum += ee[c].imag() * dl;
        mag += std::abs(ee[c]) * dl;
      }
      out.scale = std::max(out.scale, mag);
      for (std::size_t c : fiber) out.phi[c] = sum;
    }
  }
  return out;
}

ElResidual el_residual(const EigenPair& pair, const DiscreteOperator& op,
                       const SwitchingField& phi) {
  const auto& scene = op.scene();
  const auto& fam = scene.family();
  const std::size_t n = scene.grid().cell_count();
  if (phi.phi.size() != n) throw Error("switching field size does not match the grid");

  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::VectorXd absphi(ni), beta(ni), eabs(ni);
  double peak = 0.0;
  for (double f : phi.phi) peak = std::max(peak, std::abs(f));
  const bool all_zero = peak <= kVacuousRel * phi.scale;
  for (std::size_t c = 0; c < n; ++c) {
    const double f = phi.phi[c];
    double ep = fam.eps_out[c], em = fam.eps_out[c];
    if (scene.opt().contains(c)) {
      ep = fam.eps_plus;
      em = fam.eps_minus;
    }
    const auto i = Eigen::Index(c);
    absphi[i] = std::abs(f);
    beta[i] = 0.5 * (ep + em) * std::abs(f) + 0.5 * (ep - em) * f;
    eabs[i] = scene.eps()[c] * std::abs(f);
  }
  const bool zero_field = pair.psi.e.isZero(0.0) && pair.psi.h.isZero(0.0);
  if (all_zero) {
    ElResidual r;
    r.vacuous = true;
    if (zero_field) {
      r.undefined = true;
      r.value = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
  }

  const auto& inc = op.incidence();
  const Eigen::VectorXd a = (inc * eabs).cwiseQuotient(op.mass());  // eps-weighted |phi| per edge
  const Eigen::VectorXd b = inc * beta;
  const Eigen::VectorXd c = inc * absphi;
  const cplx w = pair.omega;
  const Eigen::VectorXcd& e = pair.psi.e;
  const Eigen::VectorXcd ke = spmv(op.stiffness(), e);

  const Eigen::VectorXcd ake = (a.array() * ke.array()).matrix();
  const Eigen::VectorXcd r =
      ake - cplx(0.0, 1.0) * w * (a.array() * op.loss().array() * e.array()).matrix() -
      w * w * (b.array() * e.array()).matrix();
  const double denom = ake.norm() + std::norm(w) * (c.array() * e.array()).matrix().norm();

  ElResidual out;
  if (!(denom > 0.0)) {
    out.undefined = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.value = r.norm() / denom;
  return out;
}

StructureMetrics structure_metrics(const MaterialScene& scene, std::span<const double> phi,
                                   double dead_band_rel) {
  const auto& fam = scene.family();
  double m = 0.0;
  for (std::size_t c : scene.opt_cells()) m = std::max(m, std::abs(phi[c]));
  const double band = dead_band_rel * m;
  std::size_t singular = 0, outside = 0, agree = 0;
  auto at = [](double e, double bound) {
    return std::abs(e - bound) <= kBoundSlack * bound;
  };
  for (std::size_t c : scene.opt_cells()) {
    const double f = phi[c];
    if (std::abs(f) <= band) {
      ++singular;
      continue;
    }
    ++outside;
    const double e = scene.eps()[c];
    if ((f > 0.0 && at(e, fam.eps_plus)) || (f < 0.0 && at(e, fam.eps_minus))) ++agree;
  }
  const double total = double(scene.opt_cells().size());
  StructureMetrics out;
  out.singular_fraction = total > 0 ? double(singular) / total : 1.0;
  out.bang_bang_fraction = outside > 0 ? double(agree) / double(outside) : 1.0;
  return out;
}

VerifyResult verify_el(const EigenPair& pair, const DiscreteOperator& op, SwitchingVariant variant,
                       double dead_band_rel, double angle_tol, bool apply_phase_fix) {
  const auto fixed = apply_phase_fix ? fix_phase(pair, op, angle_tol) : PhaseFix{pair, 0.0};
  VerifyResult out;
  out.phased = fixed.pair;
  out.phi = switching(out.phased, op, variant);
  const auto res = el_residual(out.phased, op, out.phi);
  const auto met = structure_metrics(op.scene(), out.phi.phi, dead_band_rel);
  out.report.residual = res.value;
  out.report.vacuous = res.vacuous;
  out.report.undefined = res.undefined;
  // A vacuous phi leaves every cell singular.
  out.report.singular_fraction = res.vacuous ? 1.0 : met.singular_fraction;
  out.report.bang_bang_fraction = res.vacuous ? 1.0 : met.bang_bang_fraction;
  out.report.phase_theta = fixed.theta;
  out.report.variant = variant;
  return out;
}

}  // namespace qpar
