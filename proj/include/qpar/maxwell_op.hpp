#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "qpar/medium.hpp"

namespace qpar {

using cplx = std::complex<double>;

/// E and H degrees of freedom on the staggered grid. E lives on cell edges,
/// H on cell faces; tangential E on reflecting walls is not stored.
struct Field {
  Eigen::VectorXcd e;
  Eigen::VectorXcd h;

  Field& operator+=(const Field& o) {
    e += o.e;
    h += o.h;
    return *this;
  }
  Field& operator-=(const Field& o) {
    e -= o.e;
    h -= o.h;
    return *this;
  }
  Field& operator*=(cplx a) {
    e *= a;
    h *= a;
    return *this;
  }
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(cplx s, Field a) { return a *= s; }

/// Psi* = (conj E, -conj H).
Field adjoint_state(const Field& psi);

/// Discrete pseudo-Hamiltonian
///   M (E, H) = ( i/eps (curl H - sigma E), -i curl E )
/// with impedance faces acting as a surface conductance 1/Z on the boundary edges.
class DiscreteOperator {
 public:
  /// Throws ValidationError if the scene is not feasible.
  static DiscreteOperator assemble(const MaterialScene& scene);

  const MaterialScene& scene() const noexcept { return *scene_; }
  std::shared_ptr<const MaterialScene> scene_ptr() const noexcept { return scene_; }

  std::size_t e_count() const noexcept { return std::size_t(mass_.size()); }
  std::size_t h_count() const noexcept { return std::size_t(w_h_.size()); }
  Field zero_field() const;

  Field apply(const Field& psi) const;
  /// Adjoint of apply with respect to the energy inner product.
  Field apply_adjoint(const Field& psi) const;

  /// Energy inner product sum m conj(a.E) b.E + w conj(a.H) b.H (conjugates the first argument).
  cplx inner(const Field& a, const Field& b) const;
  double norm(const Field& a) const;
  /// Unconjugated pairing sum m a.E b.E - w a.H b.H, the discrete <a, b*>_eps.
  cplx pairing(const Field& a, const Field& b) const;

  /// Per-cell sum over adjacent edges of (vol/4) v_e.
  Eigen::VectorXcd edge_to_cell(const Eigen::VectorXcd& v) const;
  /// vol_c (E.E)_c, the unconjugated square integrated over each cell.
  Eigen::VectorXcd cell_square(const Eigen::VectorXcd& e) const;

  /// Geometry and weights, indexed by E dof or H dof.
  int e_axis(std::size_t dof) const noexcept { return e_axis_[dof]; }
  int h_axis(std::size_t dof) const noexcept { return h_axis_[dof]; }
  std::array<double, 3> e_position(std::size_t dof) const;
  std::array<double, 3> h_position(std::size_t dof) const;

  const Eigen::VectorXd& mass() const noexcept { return mass_; }    ///< sum (vol/4) eps
  const Eigen::VectorXd& loss() const noexcept { return loss_; }    ///< sum (vol/4) sigma + 1/Z terms
  const Eigen::VectorXd& e_weight() const noexcept { return w_e_; } ///< dual volume per edge
  const Eigen::VectorXd& h_weight() const noexcept { return w_h_; } ///< dual volume per face
  const Eigen::SparseMatrix<double>& curl() const noexcept { return curl_; }
  const Eigen::SparseMatrix<double>& stiffness() const noexcept { return stiffness_; }
  /// nE x ncells with entries vol/4 for each edge-cell adjacency.
  const Eigen::SparseMatrix<double>& incidence() const noexcept { return incidence_; }

  /// Full matrix in [E; H] dof order.
  Eigen::SparseMatrix<cplx> matrix() const;
  /// Writes the matrix as "row col re im" lines.
  void export_coo(std::ostream& out) const;

 private:
  DiscreteOperator() = default;

  std::shared_ptr<const MaterialScene> scene_;
  std::vector<std::uint8_t> e_axis_, h_axis_;
  std::vector<std::array<int, 3>> e_pos_, h_pos_;
  Eigen::VectorXd mass_, loss_, w_e_, w_h_;
  Eigen::SparseMatrix<double> curl_, stiffness_, incidence_;
};

/// y = A x and y = A^T x for a real sparse A and complex x.
Eigen::VectorXcd spmv(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXcd& x);
Eigen::VectorXcd spmv_t(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXcd& x);

/// Energy-weighted relative residual ||M psi - omega psi|| / ||psi||.
double eigen_residual(const DiscreteOperator& op, cplx omega, const Field& psi);

/// Flattens a field to [E; H] and back.
Eigen::VectorXcd flatten(const Field& f);
Field unflatten(const DiscreteOperator& op, const Eigen::VectorXcd& v);

}  // namespace qpar
