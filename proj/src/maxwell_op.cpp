#include "qpar/maxwell_op.hpp"

#include <ostream>

namespace qpar {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Shape {
  std::array<int, 3> n;
  std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
  std::size_t index(const std::array<int, 3>& p) const {
    return (std::size_t(p[0]) * n[1] + p[1]) * n[2] + p[2];
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const int p2 = int(idx % n[2]);
    idx /= n[2];
    return {int(idx / n[1]), int(idx % n[1]), p2};
  }
};

// E_d: cells along d, nodes along the other axes.
Shape edge_shape(const Grid& g, int d) {
  Shape s{g.dims()};
  for (int a = 0; a < 3; ++a)
    if (a != d) s.n[a] += 1;
  return s;
}

// H_d: nodes along d, cells along the other axes.
Shape face_shape(const Grid& g, int d) {
  Shape s{g.dims()};
  s.n[d] += 1;
  return s;
}

// Index of a boundary face on side (axis a) given its cell coordinates along
// the other two axes.
std::size_t side_face_index(const Grid& g, int a, const std::array<int, 3>& cell) {
  int first = -1, second = -1;
  for (int b = 0; b < 3; ++b) {
    if (b == a) continue;
    if (first < 0)
      first = b;
    else
      second = b;
  }
  return std::size_t(cell[first]) * g.dim(second) + cell[second];
}

}  // namespace

Field adjoint_state(const Field& psi) { return {psi.e.conjugate(), -psi.h.conjugate()}; }

DiscreteOperator DiscreteOperator::assemble(const MaterialScene& scene) {
  auto report = validate_scene(scene);
  if (!report.ok()) throw ValidationError(std::move(report));

  DiscreteOperator op;
  op.scene_ = std::make_shared<const MaterialScene>(scene);
  const Grid& g = scene.grid();
  const auto& h = g.spacing();
  const double vol = g.cell_volume();

  // Edge numbering with tangential E on reflecting walls removed.
  std::array<std::vector<int>, 3> edge_dof;
  std::vector<double> w_e, loss_bdry;
  std::vector<Triplet> inc;
  for (int d = 0; d < 3; ++d) {
    const Shape s = edge_shape(g, d);
    edge_dof[d].assign(s.size(), -1);
    for (std::size_t idx = 0; idx < s.size(); ++idx) {
      const auto p = s.coords(idx);
      bool removed = false;
      double w = h[d];
      for (int a = 0; a < 3; ++a) {
        if (a == d) continue;
        const bool lo = p[a] == 0, hi = p[a] == g.dim(a);
        if ((lo && scene.side(side_index(a, false)).kind == BoundaryKind::Reflecting) ||
            (hi && scene.side(side_index(a, true)).kind == BoundaryKind::Reflecting))
          removed = true;
        w *= h[a] * ((lo || hi) ? 0.5 : 1.0);
      }
      if (removed) continue;
      const int dof = int(w_e.size());
      edge_dof[d][idx] = dof;
      op.e_axis_.push_back(std::uint8_t(d));
      op.e_pos_.push_back(p);
      w_e.push_back(w);

      const int a = (d + 1) % 3, b = (d + 2) % 3;
      for (int ca = p[a] - 1; ca <= p[a]; ++ca) {
        if (ca < 0 || ca >= g.dim(a)) continue;
        for (int cb = p[b] - 1; cb <= p[b]; ++cb) {
          if (cb < 0 || cb >= g.dim(b)) continue;
          std::array<int, 3> c{};
          c[d] = p[d];
          c[a] = ca;
          c[b] = cb;
          inc.emplace_back(dof, int(g.cell_index(c[0], c[1], c[2])), vol / 4.0);
        }
      }

      // Surface conductance from impedance walls containing this edge.
      double sb = 0.0;
      for (int wall : {a, b}) {
        const int other = wall == a ? b : a;
        const bool lo = p[wall] == 0, hi = p[wall] == g.dim(wall);
        if (!lo && !hi) continue;
        const auto& side = scene.side(side_index(wall, hi));
        if (side.kind != BoundaryKind::Impedance) continue;
        for (int co = p[other] - 1; co <= p[other]; ++co) {
          if (co < 0 || co >= g.dim(other)) continue;
          std::array<int, 3> c{};
          c[d] = p[d];
          c[other] = co;
          c[wall] = 0;
          sb += h[d] * h[other] / 2.0 / side.impedance[side_face_index(g, wall, c)];
        }
      }
      loss_bdry.push_back(sb);
    }
  }
  const auto ne = Eigen::Index(w_e.size());
  const auto ncell = Eigen::Index(g.cell_count());

  std::vector<double> w_h;
  std::vector<Triplet> curl;
  for (int d = 0; d < 3; ++d) {
    const Shape s = face_shape(g, d);
    const int a = (d + 1) % 3, b = (d + 2) % 3;
    const Shape sa = edge_shape(g, a), sb = edge_shape(g, b);
    for (std::size_t idx = 0; idx < s.size(); ++idx) {
      const auto p = s.coords(idx);
      const int row = int(w_h.size());
      const bool wall = p[d] == 0 || p[d] == g.dim(d);
      w_h.push_back(h[a] * h[b] * h[d] * (wall ? 0.5 : 1.0));
      op.h_axis_.push_back(std::uint8_t(d));
      op.h_pos_.push_back(p);
      // (curl E)_d = d_a E_b - d_b E_a
      auto add = [&](const Shape& sh, int comp, std::array<int, 3> q, double v) {
        const int dof = edge_dof[comp][sh.index(q)];
        if (dof >= 0) curl.emplace_back(row, dof, v);
      };
      auto q = p;
      q[a] += 1;
      add(sb, b, q, 1.0 / h[a]);
      add(sb, b, p, -1.0 / h[a]);
      q = p;
      q[b] += 1;
      add(sa, a, q, -1.0 / h[b]);
      add(sa, a, p, 1.0 / h[b]);
    }
  }
  const auto nh = Eigen::Index(w_h.size());

  op.w_e_ = Eigen::Map<Eigen::VectorXd>(w_e.data(), ne);
  op.w_h_ = Eigen::Map<Eigen::VectorXd>(w_h.data(), nh);
  op.curl_.resize(nh, ne);
  op.curl_.setFromTriplets(curl.begin(), curl.end());
  op.incidence_.resize(ne, ncell);
  op.incidence_.setFromTriplets(inc.begin(), inc.end());

  const Eigen::Map<const Eigen::VectorXd> eps(scene.eps().data(), ncell);
  const Eigen::Map<const Eigen::VectorXd> sigma(scene.sigma().data(), ncell);
  op.mass_ = op.incidence_ * eps;
  op.loss_ = op.incidence_ * sigma + Eigen::Map<Eigen::VectorXd>(loss_bdry.data(), ne);
  op.stiffness_ = Eigen::SparseMatrix<double>(op.curl_.transpose() * op.w_h_.asDiagonal() * op.curl_);
  op.stiffness_.makeCompressed();
  return op;
}

Field DiscreteOperator::zero_field() const {
  return {Eigen::VectorXcd::Zero(Eigen::Index(e_count())),
          Eigen::VectorXcd::Zero(Eigen::Index(h_count()))};
}

Eigen::VectorXcd spmv(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXcd& x) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(a.rows());
  for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
    const cplx xc = x[col];
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it)
      y[it.row()] += it.value() * xc;
  }
  return y;
}

Eigen::VectorXcd spmv_t(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXcd& x) {
  Eigen::VectorXcd y(a.cols());
  for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
    cplx s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it)
      s += it.value() * x[it.row()];
    y[col] = s;
  }
  return y;
}

namespace {

Field apply_signed(const DiscreteOperator& op, const Field& psi, double loss_sign) {
  const cplx I(0.0, 1.0);
  Field out;
  const Eigen::VectorXcd ce = spmv_t(op.curl(), op.h_weight().cwiseProduct(psi.h));
  out.e = I * (ce.array() - loss_sign * op.loss().array() * psi.e.array()) / op.mass().array();
  out.h = -I * spmv(op.curl(), psi.e);
  return out;
}

}  // namespace

Field DiscreteOperator::apply(const Field& psi) const { return apply_signed(*this, psi, 1.0); }

Field DiscreteOperator::apply_adjoint(const Field& psi) const {
  return apply_signed(*this, psi, -1.0);
}

cplx DiscreteOperator::inner(const Field& a, const Field& b) const {
  cplx s = 0.0;
  for (Eigen::Index n = 0; n < a.e.size(); ++n) s += mass_[n] * std::conj(a.e[n]) * b.e[n];
  for (Eigen::Index n = 0; n < a.h.size(); ++n) s += w_h_[n] * std::conj(a.h[n]) * b.h[n];
  return s;
}

double DiscreteOperator::norm(const Field& a) const {
  double s = 0.0;
  for (Eigen::Index n = 0; n < a.e.size(); ++n) s += mass_[n] * std::norm(a.e[n]);
  for (Eigen::Index n = 0; n < a.h.size(); ++n) s += w_h_[n] * std::norm(a.h[n]);
  return std::sqrt(s);
}

cplx DiscreteOperator::pairing(const Field& a, const Field& b) const {
  cplx s = 0.0;
  for (Eigen::Index n = 0; n < a.e.size(); ++n) s += mass_[n] * a.e[n] * b.e[n];
  for (Eigen::Index n = 0; n < a.h.size(); ++n) s -= w_h_[n] * a.h[n] * b.h[n];
  return s;
}

Eigen::VectorXcd DiscreteOperator::edge_to_cell(const Eigen::VectorXcd& v) const {
  return spmv_t(incidence_, v);
}

Eigen::VectorXcd DiscreteOperator::cell_square(const Eigen::VectorXcd& e) const {
  return edge_to_cell(e.cwiseProduct(e));
}

std::array<double, 3> DiscreteOperator::e_position(std::size_t dof) const {
  const auto& g = scene_->grid();
  const int d = e_axis_[dof];
  std::array<double, 3> x{};
  for (int a = 0; a < 3; ++a)
    x[a] = g.origin()[a] + g.spacing(a) * (e_pos_[dof][a] + (a == d ? 0.5 : 0.0));
  return x;
}

std::array<double, 3> DiscreteOperator::h_position(std::size_t dof) const {
  const auto& g = scene_->grid();
  const int d = h_axis_[dof];
  std::array<double, 3> x{};
  for (int a = 0; a < 3; ++a)
    x[a] = g.origin()[a] + g.spacing(a) * (h_pos_[dof][a] + (a == d ? 0.0 : 0.5));
  return x;
}

Eigen::SparseMatrix<cplx> DiscreteOperator::matrix() const {
  const cplx I(0.0, 1.0);
  const auto ne = Eigen::Index(e_count());
  const auto nh = Eigen::Index(h_count());
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(std::size_t(ne + 4 * curl_.nonZeros()));
  for (Eigen::Index n = 0; n < ne; ++n)
    if (loss_[n] != 0.0) t.emplace_back(n, n, -I * loss_[n] / mass_[n]);
  for (Eigen::Index col = 0; col < curl_.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(curl_, col); it; ++it) {
      const auto f = it.row(), e = it.col();
      t.emplace_back(e, ne + f, I * it.value() * w_h_[f] / mass_[e]);
      t.emplace_back(ne + f, e, -I * it.value());
    }
  Eigen::SparseMatrix<cplx> m(ne + nh, ne + nh);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void DiscreteOperator::export_coo(std::ostream& out) const {
  const auto m = matrix();
  const auto prec = out.precision(17);
  for (Eigen::Index col = 0; col < m.outerSize(); ++col)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(m, col); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' '
          << it.value().imag() << '\n';
  out.precision(prec);
}

double eigen_residual(const DiscreteOperator& op, cplx omega, const Field& psi) {
  Field r = op.apply(psi);
  r -= omega * psi;
  return op.norm(r) / op.norm(psi);
}

Eigen::VectorXcd flatten(const Field& f) {
  Eigen::VectorXcd v(f.e.size() + f.h.size());
  v << f.e, f.h;
  return v;
}

Field unflatten(const DiscreteOperator& op, const Eigen::VectorXcd& v) {
  const auto ne = Eigen::Index(op.e_count());
  return {v.head(ne), v.tail(v.size() - ne)};
}

}  // namespace qpar
