#include "qpar/medium.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace qpar {

Grid::Grid(std::array<int, 3> dims, std::array<double, 3> spacing, std::array<double, 3> origin,
           std::size_t max_cells)
    : dims_(dims), spacing_(spacing), origin_(origin) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 2) throw Error("grid: every axis needs at least 2 cells");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw Error("grid: spacing must be positive");
  }
  if (cell_count() > max_cells) throw Error("grid: cell count exceeds the configured cap");
}

std::array<int, 3> Grid::cell_coords(std::size_t idx) const noexcept {
  const int k = int(idx % dims_[2]);
  idx /= dims_[2];
  const int j = int(idx % dims_[1]);
  const int i = int(idx / dims_[1]);
  return {i, j, k};
}

std::size_t side_face_count(const Grid& grid, int side) {
  const int axis = side / 2;
  std::size_t n = 1;
  for (int a = 0; a < 3; ++a)
    if (a != axis) n *= grid.dim(a);
  return n;
}

BoundarySide impedance_side(const Grid& grid, int side, double z) {
  return {BoundaryKind::Impedance, std::vector<double>(side_face_count(grid, side), z)};
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Full3D: return "full3d";
    case FamilyKind::Cylinder2D: return "cylinder2d";
    case FamilyKind::Slab1D: return "slab1d";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "full3d") return FamilyKind::Full3D;
  if (s == "cylinder2d") return FamilyKind::Cylinder2D;
  if (s == "slab1d") return FamilyKind::Slab1D;
  throw Error("unknown family kind '" + s + "'");
}

MaterialScene::MaterialScene(Grid grid, RegionMask opt, FeasibleFamily family,
                             std::vector<double> eps, std::vector<double> sigma,
                             BoundarySet boundary)
    : grid_(std::move(grid)),
      opt_(std::move(opt)),
      family_(std::move(family)),
      eps_(std::move(eps)),
      sigma_(std::move(sigma)),
      boundary_(std::move(boundary)) {
  const std::size_t n = grid_.cell_count();
  if (opt_.cells.size() != n || eps_.size() != n || sigma_.size() != n)
    throw Error("scene: per-cell field size does not match the grid");
  if (family_.eps_out.size() != n) throw Error("scene: eps_out size does not match the grid");
  if (family_.kind != FamilyKind::Full3D &&
      family_.cross_section.size() != std::size_t(grid_.dim(0)) * grid_.dim(1))
    throw Error("scene: cross-section mask size does not match the grid");
  for (int s = 0; s < 6; ++s) {
    const auto& side = boundary_[s];
    if (side.kind == BoundaryKind::Impedance && side.impedance.size() != side_face_count(grid_, s))
      throw Error("scene: impedance face count does not match the grid");
  }

  for (std::size_t c = 0; c < n; ++c)
    if (opt_.contains(c)) opt_cells_.push_back(c);

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t c : opt_cells_) {
    const auto ijk = grid_.cell_coords(c);
    std::size_t key = c;
    if (family_.kind == FamilyKind::Cylinder2D)
      key = std::size_t(ijk[0]) * grid_.dim(1) + ijk[1];
    else if (family_.kind == FamilyKind::Slab1D)
      key = std::size_t(ijk[2]);
    groups[key].push_back(c);
  }
  fibers_.reserve(groups.size());
  for (auto& [key, cells] : groups) fibers_.push_back(std::move(cells));
}

MaterialScene MaterialScene::with_eps(std::vector<double> eps) const {
  return MaterialScene(grid_, opt_, family_, std::move(eps), sigma_, boundary_);
}

std::string to_string(Rule rule) {
  switch (rule) {
    case Rule::BoundsOrder: return "bounds-order";
    case Rule::LowerBound: return "lower-bound";
    case Rule::UpperBound: return "upper-bound";
    case Rule::OuterMismatch: return "outer-mismatch";
    case Rule::OuterNonPositive: return "outer-nonpositive";
    case Rule::SigmaNegative: return "sigma-negative";
    case Rule::SigmaInOpt: return "sigma-in-opt";
    case Rule::ImpedanceNonPositive: return "impedance-nonpositive";
    case Rule::OptEmpty: return "opt-empty";
    case Rule::OptTouchesImpedance: return "opt-touches-impedance";
    case Rule::FamilyGeometry: return "family-geometry";
    case Rule::FamilySymmetry: return "family-symmetry";
    case Rule::NonFinite: return "non-finite";
  }
  return "unknown";
}

bool ValidationReport::has(Rule rule) const noexcept {
  return std::any_of(violations.begin(), violations.end(),
                     [rule](const Violation& v) { return v.rule == rule; });
}

std::string ValidationReport::to_string(std::size_t max_lines) const {
  if (ok()) return "scene valid";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (std::size_t n = 0; n < violations.size() && n < max_lines; ++n) {
    const auto& v = violations[n];
    os << "\n  [" << qpar::to_string(v.rule) << "]";
    if (v.cell) os << " cell " << *v.cell;
    os << ": " << v.message;
  }
  if (violations.size() > max_lines) os << "\n  ...";
  return os.str();
}

ValidationError::ValidationError(ValidationReport report)
    : Error("invalid scene: " + report.to_string()), report_(std::move(report)) {}

namespace {

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kBoundSlack * std::max(std::abs(a), std::abs(b));
}

}  // namespace

ValidationReport validate_scene(const MaterialScene& scene) {
  ValidationReport rep;
  auto add = [&](Rule r, std::optional<std::size_t> cell, std::string msg) {
    rep.violations.push_back({r, cell, std::move(msg)});
  };
  const auto& fam = scene.family();
  const auto& grid = scene.grid();
  const double lo = fam.eps_minus, hi = fam.eps_plus;

  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    add(Rule::BoundsOrder, std::nullopt, "need 0 < eps_minus <= eps_plus");

  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const double e = scene.eps()[c];
    const double s = scene.sigma()[c];
    if (!std::isfinite(e) || !std::isfinite(s)) {
      add(Rule::NonFinite, c, "non-finite material value");
      continue;
    }
    if (s < 0.0) add(Rule::SigmaNegative, c, "conductivity is negative");
    if (scene.opt().contains(c)) {
      if (e < lo * (1.0 - kBoundSlack)) add(Rule::LowerBound, c, "eps_r below eps_minus");
      if (e > hi * (1.0 + kBoundSlack)) add(Rule::UpperBound, c, "eps_r above eps_plus");
      if (s != 0.0) add(Rule::SigmaInOpt, c, "conductivity inside the optimization region");
    } else {
      const double out = fam.eps_out[c];
      if (!(out > 0.0)) add(Rule::OuterNonPositive, c, "eps_out must be positive");
      if (e != out) add(Rule::OuterMismatch, c, "eps_r differs from eps_out");
    }
  }

  for (int s = 0; s < 6; ++s) {
    const auto& side = scene.side(s);
    if (side.kind != BoundaryKind::Impedance) continue;
    for (double z : side.impedance)
      if (!(z > 0.0) || !std::isfinite(z)) {
        add(Rule::ImpedanceNonPositive, std::nullopt,
            "impedance on side " + std::to_string(s) + " must be positive");
        break;
      }
  }

  if (scene.opt_cells().empty()) add(Rule::OptEmpty, std::nullopt, "optimization region is empty");

  for (std::size_t c : scene.opt_cells()) {
    const auto ijk = grid.cell_coords(c);
    for (int a = 0; a < 3; ++a) {
      const bool low = ijk[a] == 0, high = ijk[a] == grid.dim(a) - 1;
      if ((low && scene.side(side_index(a, false)).kind == BoundaryKind::Impedance) ||
          (high && scene.side(side_index(a, true)).kind == BoundaryKind::Impedance)) {
        add(Rule::OptTouchesImpedance, c, "optimization cell on an impedance boundary");
        break;
      }
    }
  }

  if (fam.kind != FamilyKind::Full3D) {
    const int n0 = grid.dim(0), n1 = grid.dim(1), n2 = grid.dim(2);
    if (fam.c_minus < 0 || fam.c_plus > n2 || fam.c_minus >= fam.c_plus)
      add(Rule::FamilyGeometry, std::nullopt, "invalid cylinder axis range");
    for (int i = 0; i < n0; ++i)
      for (int j = 0; j < n1; ++j)
        for (int k = 0; k < n2; ++k) {
          const std::size_t c = grid.cell_index(i, j, k);
          const bool want = fam.cross_section[std::size_t(i) * n1 + j] != 0 &&
                            k >= fam.c_minus && k < fam.c_plus;
          if (want != scene.opt().contains(c)) {
            add(Rule::FamilyGeometry, c, "optimization mask is not a discrete cylinder");
            i = n0;
            j = n1;
            break;
          }
        }
    for (const auto& fiber : scene.fibers()) {
      const double ref = scene.eps()[fiber.front()];
      for (std::size_t c : fiber)
        if (!nearly_equal(scene.eps()[c], ref)) {
          add(Rule::FamilySymmetry, c,
              fam.kind == FamilyKind::Cylinder2D ? "eps_r varies along x3 within a column"
                                                 : "eps_r varies over the cross-section");
          break;
        }
    }
  }
  return rep;
}

std::pair<double, double> direction_box(const MaterialScene& scene, std::size_t cell) {
  const double u = 1.0 / scene.eps()[cell];
  const auto& fam = scene.family();
  return {std::min(0.0, 1.0 / fam.eps_plus - u), std::max(0.0, 1.0 / fam.eps_minus - u)};
}

Direction admissible_direction(const MaterialScene& scene, std::span<const double> target_eps) {
  const auto& cells = scene.opt_cells();
  if (target_eps.size() != cells.size())
    throw Error("admissible_direction: target size does not match the optimization region");
  const auto& fam = scene.family();
  Direction d{std::vector<double>(scene.grid().cell_count(), 0.0)};
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const double t = target_eps[n];
    if (!std::isfinite(t) || t < fam.eps_minus * (1.0 - kBoundSlack) ||
        t > fam.eps_plus * (1.0 + kBoundSlack))
      throw InfeasibleTarget(cells[n], "infeasible target permittivity at cell " +
                                           std::to_string(cells[n]));
    d.p[cells[n]] = 1.0 / t - 1.0 / scene.eps()[cells[n]];
  }
  if (fam.kind != FamilyKind::Full3D) {
    std::vector<double> tfield(scene.grid().cell_count(), 0.0);
    for (std::size_t n = 0; n < cells.size(); ++n) tfield[cells[n]] = target_eps[n];
    for (const auto& fiber : scene.fibers())
      for (std::size_t c : fiber)
        if (!nearly_equal(tfield[c], tfield[fiber.front()]))
          throw InfeasibleTarget(c, "target breaks the family symmetry at cell " +
                                        std::to_string(c));
  }
  return d;
}

std::vector<double> fiber_average(const MaterialScene& scene, std::span<const double> field) {
  std::vector<double> out(field.begin(), field.end());
  for (const auto& fiber : scene.fibers()) {
    double sum = 0.0;
    for (std::size_t c : fiber) sum += field[c];
    const double mean = sum / double(fiber.size());
    for (std::size_t c : fiber) out[c] = mean;
  }
  return out;
}

Direction symmetry_project(const Direction& direction, const MaterialScene& scene) {
  if (scene.family().kind == FamilyKind::Full3D) return direction;
  return {fiber_average(scene, direction.p)};
}

StepOutcome apply_inverse_step(const MaterialScene& scene, const Direction& direction, double t) {
  const auto& fam = scene.family();
  const double ulo = 1.0 / fam.eps_plus, uhi = 1.0 / fam.eps_minus;
  std::vector<double> eps = scene.eps();
  std::size_t clipped = 0;
  for (std::size_t c : scene.opt_cells()) {
    const double p = direction.p[c];
    if (p == 0.0) continue;
    double u = 1.0 / eps[c] + t * p;
    if (u < ulo || u > uhi) ++clipped;
    u = std::clamp(u, ulo, uhi);
    double e = 1.0 / u;
    if (nearly_equal(e, fam.eps_minus)) e = fam.eps_minus;
    if (nearly_equal(e, fam.eps_plus)) e = fam.eps_plus;
    eps[c] = e;
  }
  return {scene.with_eps(std::move(eps)), clipped};
}

MaterialScene bang_bang_round(const MaterialScene& scene, std::span<const double> phi,
                              double dead_band) {
  const std::vector<double> avg = fiber_average(scene, phi);
  std::vector<double> eps = scene.eps();
  for (std::size_t c : scene.opt_cells()) {
    if (avg[c] > dead_band)
      eps[c] = scene.family().eps_plus;
    else if (avg[c] < -dead_band)
      eps[c] = scene.family().eps_minus;
  }
  return scene.with_eps(std::move(eps));
}

double default_dead_band(const MaterialScene& scene, std::span<const double> phi) {
  double m = 0.0;
  for (std::size_t c : scene.opt_cells()) m = std::max(m, std::abs(phi[c]));
  return 1e-10 * m;
}

}  // namespace qpar
