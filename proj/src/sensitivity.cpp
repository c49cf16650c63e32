#include "qpar/sensitivity.hpp"

#include <ostream>

#include <spdlog/spdlog.h>

namespace qpar {

SensitivityDensity density(const EigenPair& pair, const DiscreteOperator& op,
                           DensityFormula formula, double tol_pair) {
  if (simplicity_check(pair, tol_pair) != Simplicity::Simple)
    throw DegenerateEigenpair("eigenpair pairing below the simplicity threshold");
  const auto& scene = op.scene();
  const double vol = scene.grid().cell_volume();
  const Eigen::VectorXcd sq = op.cell_square(pair.psi.e);

  SensitivityDensity d;
  d.denom = pair.pairing;
  d.omega0 = pair.omega;
  d.cell_volume = vol;
  d.support = scene.opt().cells;
  d.g.assign(scene.grid().cell_count(), 0.0);
  for (std::size_t c : scene.opt_cells()) {
    const double e = scene.eps()[c];
    cplx coef = pair.omega * e * e;
    if (formula == DensityFormula::SigmaAware) coef += cplx(0.0, scene.sigma()[c] * e);
    d.g[c] = coef * (sq[Eigen::Index(c)] / vol) / d.denom;
  }
  return d;
}

cplx first_order_shift(const SensitivityDensity& dens, const Direction& p) {
  if (p.p.size() != dens.g.size()) throw Error("direction size does not match the grid");
  cplx s = 0.0;
  for (std::size_t c = 0; c < p.p.size(); ++c) {
    if (p.p[c] == 0.0) continue;
    if (!dens.support[c])
      throw Error("direction is supported outside the optimization region at cell " +
                  std::to_string(c));
    s += p.p[c] * dens.g[c];
  }
  return s * dens.cell_volume;
}

void FdTable::write(std::ostream& out) const {
  const auto prec = out.precision(10);
  out << "h\tfd_re\tfd_im\tc1_re\tc1_im\tabs_err\trel_err\tstatus\n";
  for (const auto& r : rows)
    out << r.h << '\t' << r.fd_slope.real() << '\t' << r.fd_slope.imag() << '\t' << c1.real()
        << '\t' << c1.imag() << '\t' << r.abs_error << '\t' << r.rel_error << '\t'
        << (r.branch_jump ? "branch-jump" : "ok") << '\n';
  out.precision(prec);
}

FdTable fd_validate(const MaterialScene& scene, const EigenPair& pair, const Direction& p,
                    std::span<const double> steps, const FdOptions& options) {
  const auto op = DiscreteOperator::assemble(scene);
  const auto dens = density(pair, op);
  FdTable table;
  table.c1 = first_order_shift(dens, p);
  const double tol_abs = options.eigen.tol * (1.0 + std::abs(pair.omega));

  for (double h : steps) {
    FdRow row;
    row.h = h;
    auto step = apply_inverse_step(scene, p, h);
    if (step.clipped > 0)
      throw Error("fd_validate: step " + std::to_string(h) + " leaves the feasible box");
    if (step.scene.eps() == scene.eps()) {
      row.omega_h = pair.omega;
    } else {
      const auto op_h = DiscreteOperator::assemble(step.scene);
      EigenOptions eo = options.eigen;
      eo.start = &pair.psi;
      const SearchWindow win{pair.omega + h * table.c1, 10.0 * std::abs(h * table.c1) + tol_abs,
                             1};
      const auto found = find_eigs(op_h, win, eo);
      if (found.empty()) {
        row.branch_jump = true;
        spdlog::warn("fd_validate: branch jump at h = {}", h);
        table.rows.push_back(row);
        continue;
      }
      row.omega_h = found.front().omega;
    }
    row.fd_slope = (row.omega_h - pair.omega) / h;
    row.abs_error = std::abs(row.fd_slope - table.c1);
    row.rel_error = std::abs(table.c1) > 0.0 ? row.abs_error / std::abs(table.c1) : row.abs_error;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace qpar
