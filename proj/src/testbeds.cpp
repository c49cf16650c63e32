#include "qpar/testbeds.hpp"

#include <cmath>
#include <numbers>

namespace qpar {

MaterialScene make_slab(const SlabParams& p) {
  if (p.cells < 3) throw Error("slab needs at least 3 layers");
  const double h = p.length / p.cells;
  const Grid grid({p.transverse, p.transverse, p.cells}, {h, h, h});
  const std::size_t n = grid.cell_count();
  const double top = p.eps_top < 0.0 ? p.eps : p.eps_top;

  FeasibleFamily fam;
  fam.eps_minus = p.eps_minus;
  fam.eps_plus = p.eps_plus;
  fam.kind = FamilyKind::Slab1D;
  fam.c_minus = 0;
  fam.c_plus = p.cells - 1;
  fam.cross_section.assign(std::size_t(p.transverse) * p.transverse, 1);
  fam.eps_out.assign(n, top);

  RegionMask mask{std::vector<std::uint8_t>(n, 0)};
  std::vector<double> eps(n, p.eps);
  for (std::size_t c = 0; c < n; ++c) {
    if (grid.cell_coords(c)[2] < fam.c_plus)
      mask.cells[c] = 1;
    else
      eps[c] = top;
  }

  BoundarySet sides;
  sides[side_index(0, false)].kind = BoundaryKind::MagneticWall;
  sides[side_index(0, true)].kind = BoundaryKind::MagneticWall;
  sides[side_index(1, false)].kind = BoundaryKind::Reflecting;
  sides[side_index(1, true)].kind = BoundaryKind::Reflecting;
  sides[side_index(2, false)].kind = BoundaryKind::Reflecting;
  sides[side_index(2, true)] = impedance_side(grid, side_index(2, true), 1.0 / p.gamma);
  return MaterialScene(grid, std::move(mask), std::move(fam), std::move(eps),
                       std::vector<double>(n, 0.0), std::move(sides));
}

MaterialScene make_box(const BoxParams& p) {
  const Grid grid({p.n, p.n, p.n}, {p.size[0] / p.n, p.size[1] / p.n, p.size[2] / p.n});
  const std::size_t n = grid.cell_count();
  if (p.opt_margin < 1 || 2 * p.opt_margin >= p.n)
    throw Error("box optimization margin out of range");
  if (p.shell > 0 && p.shell >= p.opt_margin)
    throw Error("absorbing shell overlaps the optimization block");

  FeasibleFamily fam;
  fam.eps_minus = p.eps_minus;
  fam.eps_plus = p.eps_plus;
  fam.kind = FamilyKind::Full3D;
  fam.eps_out.assign(n, p.eps);

  RegionMask mask{std::vector<std::uint8_t>(n, 0)};
  std::vector<double> sigma(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const auto ijk = grid.cell_coords(c);
    bool in = true;
    int depth = p.n;
    for (int a = 0; a < 3; ++a) {
      in = in && ijk[a] >= p.opt_margin && ijk[a] < p.n - p.opt_margin;
      depth = std::min({depth, ijk[a], p.n - 1 - ijk[a]});
    }
    mask.cells[c] = in ? 1 : 0;
    if (depth < p.shell) sigma[c] = p.shell_sigma;
  }

  BoundarySet sides;
  for (int s = 0; s < 6; ++s) {
    if (p.walls == BoundaryKind::Impedance)
      sides[s] = impedance_side(grid, s, p.impedance);
    else
      sides[s].kind = p.walls;
  }
  return MaterialScene(grid, std::move(mask), std::move(fam), std::vector<double>(n, p.eps),
                       std::move(sigma), std::move(sides));
}

namespace {

constexpr double kStackGamma = 3.0;
constexpr int kStackCells = 256;

std::vector<OracleValue> slab_roots() {
  std::vector<OracleValue> out;
  for (int k = 1; k <= 3; ++k)
    out.push_back({"omega_" + std::to_string(k),
                   {std::numbers::pi * k, -0.5 * std::log(2.0)},
                   "DERIVED",
                   "exp(2 i omega) = (gamma + 1) / (gamma - 1) = 2 for eps = 1, L = 1, gamma = 3"});
  return out;
}

}  // namespace

std::vector<TestbedInfo> testbed_catalog() {
  return {
      {"slab-uniform", "eps = 1 slab, L = 1, gamma = 3, 64 layers", slab_roots()},
      {"stack-air-si",
       "layered slab with air/silicon bounds, L = 1, gamma = 3, 256 layers, silicon start",
       {{"eps_minus", {kEpsAir, 0.0}, "PUBLISHED", "published example value for air"},
        {"eps_plus", {kEpsSilicon, 0.0}, "PUBLISHED", "published example value for silicon"}}},
      {"cube-impedance", "16^3 box 1 x 0.9 x 0.8, Z = 2 on every wall, eps = 1", {}},
      {"cube-absorber",
       "16^3 box 1 x 0.9 x 0.8, reflecting walls, sigma = 1 in a 2-cell shell, eps = 1",
       {}},
      {"box-closed", "12^3 box 1 x 0.9 x 0.8, reflecting walls, eps = 1, lossless", {}},
      {"cube-symmetric", "8^3 unit cube, reflecting walls, eps = 1; degenerate lowest modes", {}},
  };
}

MaterialScene build_scene(const std::string& name) {
  if (name == "slab-uniform") return make_slab({});
  if (name == "stack-air-si") {
    SlabParams p;
    p.cells = kStackCells;
    p.eps = kEpsSilicon;
    p.eps_top = kEpsAir;
    p.gamma = kStackGamma;
    return make_slab(p);
  }
  if (name == "cube-impedance") return make_box({});
  if (name == "cube-absorber") {
    BoxParams p;
    p.walls = BoundaryKind::Reflecting;
    p.shell = 2;
    p.shell_sigma = 1.0;
    return make_box(p);
  }
  if (name == "box-closed") {
    BoxParams p;
    p.n = 12;
    p.walls = BoundaryKind::Reflecting;
    p.opt_margin = 3;
    return make_box(p);
  }
  if (name == "cube-symmetric") {
    BoxParams p;
    p.n = 8;
    p.size = {1.0, 1.0, 1.0};
    p.walls = BoundaryKind::Reflecting;
    p.opt_margin = 2;
    return make_box(p);
  }
  throw Error("unknown testbed '" + name + "'");
}

LayeredProfile1D build_profile(const std::string& name) {
  if (name == "slab-uniform") return {{{1.0, 1.0}}, 3.0};
  if (name == "stack-air-si") return profile_from_scene(build_scene(name));
  throw Error("testbed '" + name + "' has no layered profile");
}

}  // namespace qpar
