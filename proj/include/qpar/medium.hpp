#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpar/errors.hpp"

namespace qpar {

inline constexpr std::size_t kDefaultMaxCells = std::size_t{1} << 21;

/// Regular box of cells. Cells are numbered row-major, the last axis fastest.
class Grid {
 public:
  Grid() = default;
  Grid(std::array<int, 3> dims, std::array<double, 3> spacing,
       std::array<double, 3> origin = {0.0, 0.0, 0.0},
       std::size_t max_cells = kDefaultMaxCells);

  const std::array<int, 3>& dims() const noexcept { return dims_; }
  int dim(int axis) const noexcept { return dims_[axis]; }
  const std::array<double, 3>& spacing() const noexcept { return spacing_; }
  double spacing(int axis) const noexcept { return spacing_[axis]; }
  const std::array<double, 3>& origin() const noexcept { return origin_; }

  std::size_t cell_count() const noexcept {
    return std::size_t(dims_[0]) * dims_[1] * dims_[2];
  }
  double cell_volume() const noexcept { return spacing_[0] * spacing_[1] * spacing_[2]; }

  std::size_t cell_index(int i, int j, int k) const noexcept {
    return (std::size_t(i) * dims_[1] + j) * dims_[2] + k;
  }
  std::array<int, 3> cell_coords(std::size_t idx) const noexcept;

 private:
  std::array<int, 3> dims_{2, 2, 2};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<double, 3> origin_{0.0, 0.0, 0.0};
};

enum class BoundaryKind : std::uint32_t {
  Impedance = 0,     ///< n x E = Z H_tan, leaky.
  Reflecting = 1,    ///< tangential E = 0.
  MagneticWall = 2,  ///< tangential H = 0, a symmetry plane.
};

/// One of the six box faces. Sides are numbered 2*axis + (high ? 1 : 0).
struct BoundarySide {
  BoundaryKind kind = BoundaryKind::Reflecting;
  /// Per-face impedance for Impedance sides, indexed row-major over the two
  /// remaining axes in increasing axis order. Empty otherwise.
  std::vector<double> impedance;
};

using BoundarySet = std::array<BoundarySide, 6>;

constexpr int side_index(int axis, bool high) noexcept { return 2 * axis + (high ? 1 : 0); }

/// Number of boundary faces on a side of the grid.
std::size_t side_face_count(const Grid& grid, int side);

/// Side with a constant impedance value on every face.
BoundarySide impedance_side(const Grid& grid, int side, double z);

/// Cell membership in the optimization region.
struct RegionMask {
  std::vector<std::uint8_t> cells;
  bool contains(std::size_t idx) const noexcept { return cells[idx] != 0; }
};

enum class FamilyKind : std::uint32_t { Full3D = 0, Cylinder2D = 1, Slab1D = 2 };

/// Feasible permittivities. For the two cylindrical kinds the optimization
/// region is cross_section x [c_minus, c_plus) with the cylinder axis along x3.
struct FeasibleFamily {
  double eps_minus = 1.0;
  double eps_plus = 1.0;
  FamilyKind kind = FamilyKind::Full3D;
  int c_minus = 0;
  int c_plus = 0;
  std::vector<std::uint8_t> cross_section;  ///< n0*n1 cells, row-major.
  std::vector<double> eps_out;               ///< per cell, read on the outer region only.
};

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& s);

class MaterialScene {
 public:
  MaterialScene(Grid grid, RegionMask opt, FeasibleFamily family, std::vector<double> eps,
                std::vector<double> sigma, BoundarySet boundary);

  const Grid& grid() const noexcept { return grid_; }
  const RegionMask& opt() const noexcept { return opt_; }
  const FeasibleFamily& family() const noexcept { return family_; }
  const std::vector<double>& eps() const noexcept { return eps_; }
  const std::vector<double>& sigma() const noexcept { return sigma_; }
  const BoundarySet& boundary() const noexcept { return boundary_; }
  const BoundarySide& side(int s) const noexcept { return boundary_[s]; }

  /// Optimization cells in increasing index order.
  const std::vector<std::size_t>& opt_cells() const noexcept { return opt_cells_; }
  /// Partition of the optimization cells into fibers. Full3D fibers are
  /// single cells, Cylinder2D fibers are x3 columns, Slab1D fibers are layers.
  const std::vector<std::vector<std::size_t>>& fibers() const noexcept { return fibers_; }

  MaterialScene with_eps(std::vector<double> eps) const;

 private:
  Grid grid_;
  RegionMask opt_;
  FeasibleFamily family_;
  std::vector<double> eps_;
  std::vector<double> sigma_;
  BoundarySet boundary_;
  std::vector<std::size_t> opt_cells_;
  std::vector<std::vector<std::size_t>> fibers_;
};

enum class Rule {
  BoundsOrder,
  LowerBound,
  UpperBound,
  OuterMismatch,
  OuterNonPositive,
  SigmaNegative,
  SigmaInOpt,
  ImpedanceNonPositive,
  OptEmpty,
  OptTouchesImpedance,
  FamilyGeometry,
  FamilySymmetry,
  NonFinite,
};

std::string to_string(Rule rule);

struct Violation {
  Rule rule;
  std::optional<std::size_t> cell;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
  bool has(Rule rule) const noexcept;
  std::string to_string(std::size_t max_lines = 20) const;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Relative slack used when comparing permittivities against the bounds.
inline constexpr double kBoundSlack = 1e-12;

ValidationReport validate_scene(const MaterialScene& scene);

/// Perturbation of 1/eps, stored per grid cell and zero off the optimization region.
struct Direction {
  std::vector<double> p;
};

/// Lower and upper admissible values of p at one cell (unit cone constant).
std::pair<double, double> direction_box(const MaterialScene& scene, std::size_t cell);

/// p = 1/target - 1/eps. target_eps is given per optimization cell in opt_cells() order.
Direction admissible_direction(const MaterialScene& scene, std::span<const double> target_eps);

/// Averages p over the fibers of the scene's family. Identity for Full3D.
Direction symmetry_project(const Direction& direction, const MaterialScene& scene);

struct StepOutcome {
  MaterialScene scene;
  std::size_t clipped = 0;
};

/// Applies 1/eps <- 1/eps + t p on the optimization region, clipped to the bounds.
/// Values within kBoundSlack of a bound snap onto it.
StepOutcome apply_inverse_step(const MaterialScene& scene, const Direction& direction, double t);

/// Thresholds phi (after fiber averaging) against an absolute dead band.
MaterialScene bang_bang_round(const MaterialScene& scene, std::span<const double> phi,
                              double dead_band);

/// Default absolute dead band, 1e-10 * max |phi| over the optimization region.
double default_dead_band(const MaterialScene& scene, std::span<const double> phi);

/// Fiber average of a cell field, broadcast back to every cell of the fiber.
std::vector<double> fiber_average(const MaterialScene& scene, std::span<const double> field);

}  // namespace qpar
