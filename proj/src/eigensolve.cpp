#include "qpar/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/UmfPackSupport>
#include <spdlog/spdlog.h>

#include "binary_io.hpp"

namespace qpar {

namespace {

constexpr cplx kI(0.0, 1.0);

std::string describe(const SearchWindow& w) {
  std::ostringstream os;
  os << "window center " << w.center.real() << (w.center.imag() < 0 ? "" : "+")
     << w.center.imag() << "i radius " << w.radius;
  return os.str();
}

}  // namespace

struct ShiftInvert::Impl {
  Eigen::SparseMatrix<cplx> a;
  Eigen::UmfPackLU<Eigen::SparseMatrix<cplx>> lu;
};

ShiftInvert::ShiftInvert(const DiscreteOperator& op, cplx shift)
    : op_(&op), mu_(shift), impl_(std::make_unique<Impl>()) {
  if (std::abs(shift) == 0.0) throw Error("shift-invert needs a nonzero shift");
  // A(mu) = K - i mu S - mu^2 M acting on E alone.
  Eigen::SparseMatrix<cplx>& a = impl_->a;
  a = op.stiffness().cast<cplx>();
  for (Eigen::Index n = 0; n < a.rows(); ++n)
    a.coeffRef(n, n) += -kI * mu_ * op.loss()[n] - mu_ * mu_ * op.mass()[n];
  a.makeCompressed();
  impl_->lu.umfpackControl()(UMFPACK_IRSTEP) = 0;
  impl_->lu.analyzePattern(a);
  impl_->lu.factorize(a);
  if (impl_->lu.info() != Eigen::Success)
    throw ConvergenceError("sparse factorization failed at the requested shift");
}

ShiftInvert::~ShiftInvert() = default;
ShiftInvert::ShiftInvert(ShiftInvert&&) noexcept = default;
ShiftInvert& ShiftInvert::operator=(ShiftInvert&&) noexcept = default;

Field ShiftInvert::solve(const Field& b) const {
  const auto& op = *op_;
  const Eigen::VectorXcd rhs =
      mu_ * (op.mass().array() * b.e.array()).matrix() +
      kI * spmv_t(op.curl(), op.h_weight().cwiseProduct(b.h));
  Field x;
  x.e = impl_->lu.solve(rhs);
  x.h = (-kI * spmv(op.curl(), x.e) - b.h) / mu_;
  return x;
}

EigenPair normalize_pair(const DiscreteOperator& op, cplx omega, Field psi) {
  psi *= 1.0 / op.norm(psi);
  const cplx p = op.pairing(psi, psi);
  if (std::abs(p) > 0.0) psi *= std::exp(-0.5 * kI * std::arg(p));
  Eigen::Index imax = 0;
  psi.e.cwiseAbs().maxCoeff(&imax);
  if (psi.e.size() > 0 && psi.e[imax].real() < 0.0) psi *= -1.0;
  EigenPair out;
  out.omega = omega;
  out.pairing = op.pairing(psi, psi);
  out.norm_sq = std::pow(op.norm(psi), 2);
  out.residual = eigen_residual(op, omega, psi);
  out.psi = std::move(psi);
  return out;
}

namespace {

// Best of the energy and pairing Rayleigh quotients.
std::pair<cplx, double> best_quotient(const DiscreteOperator& op, const Field& x, cplx guess) {
  const Field mx = op.apply(x);
  std::vector<cplx> cands{guess, op.inner(x, mx) / op.inner(x, x)};
  const cplx pxx = op.pairing(x, x);
  if (std::abs(pxx) > 1e-10 * std::pow(op.norm(x), 2)) cands.push_back(op.pairing(mx, x) / pxx);
  cplx best = guess;
  double best_res = std::numeric_limits<double>::infinity();
  for (cplx c : cands) {
    const double r = eigen_residual(op, c, x);
    if (r < best_res) {
      best_res = r;
      best = c;
    }
  }
  return {best, best_res};
}

}  // namespace

std::vector<EigenPair> find_eigs(const DiscreteOperator& op, const SearchWindow& window,
                                 const EigenOptions& opt) {
  if (window.count < 1) throw Error("search window needs count >= 1");
  if (!(window.radius > 0.0)) throw Error("search window needs a positive radius");

  cplx mu = window.center;
  if (std::abs(mu) < 1e-8) mu = cplx(0.0, 1e-3 * std::max(1.0, window.radius));
  const ShiftInvert T(op, mu);

  const auto ne = Eigen::Index(op.e_count());
  const Eigen::Index n = ne + Eigen::Index(op.h_count());
  Eigen::VectorXd d(n);
  d << op.mass(), op.h_weight();

  auto dot = [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a.array().conjugate() * b.array() * d.array()).sum();
  };
  auto apply_t = [&](const Eigen::VectorXcd& v) { return flatten(T.solve(unflatten(op, v))); };

  const int want = window.count;
  const int block = std::min(want, 4);
  const int mmax = std::max(opt.max_basis, 3 * want + 2 * block + 4);
  Eigen::MatrixXcd V(n, mmax), W(n, mmax);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(mmax, mmax);  // V^* D W
  int k = 0;

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  auto random_vector = [&] {
    Eigen::VectorXcd v(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = normal(rng);
      v[j] = cplx(re, normal(rng));
    }
    return v;
  };
  auto append = [&](Eigen::VectorXcd v) {
    const double n0 = std::sqrt(dot(v, v).real());
    if (!(n0 > 0.0)) return false;
    for (int pass = 0; pass < 2 && k > 0; ++pass) {
      const Eigen::VectorXcd c = V.leftCols(k).adjoint() * d.cwiseProduct(v);
      v -= V.leftCols(k) * c;
    }
    const double n1 = std::sqrt(dot(v, v).real());
    if (!(n1 > 1e-10 * n0)) return false;
    V.col(k) = v / n1;
    W.col(k) = apply_t(V.col(k));
    const Eigen::VectorXcd dv = d.cwiseProduct(V.col(k));
    const Eigen::VectorXcd dw = d.cwiseProduct(W.col(k));
    H.row(k).head(k + 1) = dv.adjoint() * W.leftCols(k + 1);
    H.col(k).head(k) = V.leftCols(k).adjoint() * dw;
    ++k;
    return true;
  };

  if (opt.start && opt.start->e.size() == ne && opt.start->h.size() == n - ne)
    append(flatten(*opt.start));
  while (k < block) append(random_vector());

  struct Candidate {
    cplx lambda;
    Eigen::VectorXcd x;
    double residual;
  };
  std::vector<Candidate> found;
  bool done = false;

  int iter = 0;
  for (; iter < opt.max_iterations && !done; ++iter) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(k, k));
    if (es.info() != Eigen::Success) throw ConvergenceError("projected eigenproblem failed");
    std::vector<int> order(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) order[std::size_t(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
    });

    const int consider = std::min(want, k);
    std::vector<Eigen::VectorXcd> expansions;
    std::vector<Candidate> ritz;
    int leading_converged = 0;
    bool leading = true;
    for (int r = 0; r < consider; ++r) {
      const int j = order[std::size_t(r)];
      const cplx theta = es.eigenvalues()[j];
      const Eigen::VectorXcd y = es.eigenvectors().col(j);
      Eigen::VectorXcd x = V.leftCols(k) * y;
      const Eigen::VectorXcd tx = W.leftCols(k) * y;
      const cplx lambda = mu + 1.0 / theta;
      const double res = eigen_residual(op, lambda, unflatten(op, x));
      const bool conv = res <= opt.tol;
      if (conv && leading)
        ++leading_converged;
      else
        leading = false;
      ritz.push_back({lambda, x, res});
      if (!conv && int(expansions.size()) < block) expansions.push_back(tx - theta * x);
    }
    if (leading_converged == consider && consider == want) done = true;
    if (leading_converged > 0 &&
        std::abs(ritz[std::size_t(leading_converged - 1)].lambda - window.center) > window.radius)
      done = true;
    if (done) {
      ritz.resize(std::size_t(leading_converged));
      found = std::move(ritz);
      break;
    }

    if (k + int(expansions.size()) > mmax) {
      const int keep = std::min(k, std::max(want + block, mmax / 2));
      Eigen::MatrixXcd y(k, keep);
      for (int r = 0; r < keep; ++r) y.col(r) = es.eigenvectors().col(order[std::size_t(r)]);
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
      const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(k, keep);
      const Eigen::MatrixXcd nv = V.leftCols(k) * q;
      const Eigen::MatrixXcd nw = W.leftCols(k) * q;
      const Eigen::MatrixXcd nh = q.adjoint() * H.topLeftCorner(k, k) * q;
      V.leftCols(keep) = nv;
      W.leftCols(keep) = nw;
      H.topLeftCorner(keep, keep) = nh;
      k = keep;
    }
    bool grew = false;
    for (auto& e : expansions) grew = append(std::move(e)) || grew;
    if (!grew && k < mmax) append(random_vector());
  }
  if (!done) throw ConvergenceError("eigen iteration did not converge in " + describe(window));

  std::vector<EigenPair> out;
  for (auto& c : found) {
    Field x = unflatten(op, c.x);
    auto [lambda, res] = best_quotient(op, x, c.lambda);
    for (int it = 0; it < 4 && res > 0.1 * opt.tol; ++it) {
      const ShiftInvert rqi(op, lambda);
      Field y = rqi.solve(x);
      y *= 1.0 / op.norm(y);
      auto [l2, r2] = best_quotient(op, y, lambda);
      if (r2 >= res) break;
      x = std::move(y);
      lambda = l2;
      res = r2;
    }
    if (res > opt.tol)
      throw ConvergenceError("eigenpair residual above tolerance in " + describe(window));
    if (std::abs(lambda - window.center) > window.radius) continue;
    out.push_back(normalize_pair(op, lambda, std::move(x)));
  }
  std::stable_sort(out.begin(), out.end(), [&](const EigenPair& a, const EigenPair& b) {
    return std::abs(a.omega - window.center) < std::abs(b.omega - window.center);
  });
  spdlog::debug("find_eigs: {} pair(s) in {} after {} iteration(s), basis {}", out.size(),
                describe(window), iter, k);
  return out;
}

Simplicity simplicity_check(const EigenPair& pair, double tol_pair) {
  const double ratio = std::abs(pair.pairing) / pair.norm_sq;
  spdlog::debug("simplicity_check: |pairing|/||psi||^2 = {:.3e}, threshold {:.1e}", ratio,
                tol_pair);
  return ratio >= tol_pair ? Simplicity::Simple : Simplicity::DegenerateOrIllConditioned;
}

std::vector<ConeGenerator> cone_generators(const EigenPair& pair, const DiscreteOperator& op) {
  const auto& scene = op.scene();
  const auto& fam = scene.family();
  const Eigen::VectorXcd sq = op.cell_square(pair.psi.e);
  const double slack = 1e-12 * (1.0 / fam.eps_minus - 1.0 / fam.eps_plus);
  std::vector<ConeGenerator> gens;
  gens.reserve(scene.fibers().size());
  for (const auto& fiber : scene.fibers()) {
    cplx w = 0.0;
    for (std::size_t c : fiber) w += scene.eps()[c] * scene.eps()[c] * sq[Eigen::Index(c)];
    const auto [lo, hi] = direction_box(scene, fiber.front());
    gens.push_back({w, hi > slack, lo < -slack});
  }
  return gens;
}

PhaseFix fix_phase(const EigenPair& pair, const DiscreteOperator& op, double angle_tol) {
  constexpr double pi = std::numbers::pi;
  const auto gens = cone_generators(pair, op);
  double wmax = 0.0;
  for (const auto& g : gens) wmax = std::max(wmax, std::abs(g.w));
  std::vector<double> angles;
  for (const auto& g : gens) {
    if (!(std::abs(g.w) > 1e-14 * wmax)) continue;
    if (g.up) angles.push_back(std::arg(g.w));
    if (g.down) angles.push_back(std::arg(-g.w));
  }
  PhaseFix out{pair, 0.0};
  if (angles.empty()) return out;
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * pi - angles.back();
  double cone_start = angles.front();
  for (std::size_t j = 0; j + 1 < angles.size(); ++j) {
    const double g = angles[j + 1] - angles[j];
    if (g > gap) {
      gap = g;
      cone_start = angles[j + 1];
    }
  }
  const double extent = 2.0 * pi - gap;
  if (extent > pi + angle_tol)
    throw NotFirstOrderOptimal("not first-order optimal: the first-order cone spans " +
                               std::to_string(extent) + " rad");
  const double mid = cone_start + 0.5 * extent;
  double theta = std::remainder(0.5 * (0.5 * pi - mid), pi);
  if (theta <= -0.5 * pi) theta += pi;
  out.theta = theta;
  const cplx rot = std::exp(kI * theta);
  out.pair.psi *= rot;
  out.pair.pairing *= rot * rot;
  return out;
}

void write_eigenpair(const std::filesystem::path& path, const EigenPair& pair,
                     const MaterialScene& scene) {
  BinaryWriter w;
  w.magic("QPEF");
  w.u32(1);
  for (int a = 0; a < 3; ++a) w.u32(std::uint32_t(scene.grid().dim(a)));
  w.c128(pair.omega);
  w.c128(pair.pairing);
  w.f64(pair.residual);
  w.u32(std::uint32_t(pair.psi.e.size()));
  w.u32(std::uint32_t(pair.psi.h.size()));
  for (Eigen::Index j = 0; j < pair.psi.e.size(); ++j) w.c128(pair.psi.e[j]);
  for (Eigen::Index j = 0; j < pair.psi.h.size(); ++j) w.c128(pair.psi.h[j]);
  w.save(path);
}

EigenPair read_eigenpair(const std::filesystem::path& path, const DiscreteOperator& op) {
  BinaryReader r(path);
  r.expect_magic("QPEF");
  if (r.u32() != 1) throw Error("unsupported eigenpair version in " + path.string());
  for (int a = 0; a < 3; ++a)
    if (int(r.u32()) != op.scene().grid().dim(a))
      throw Error("eigenpair grid does not match the scene");
  EigenPair pair;
  pair.omega = r.c128();
  r.c128();
  r.f64();
  const auto ne = Eigen::Index(r.u32());
  const auto nh = Eigen::Index(r.u32());
  if (std::size_t(ne) != op.e_count() || std::size_t(nh) != op.h_count())
    throw Error("eigenpair field size does not match the scene");
  pair.psi = op.zero_field();
  for (Eigen::Index j = 0; j < ne; ++j) pair.psi.e[j] = r.c128();
  for (Eigen::Index j = 0; j < nh; ++j) pair.psi.h[j] = r.c128();
  r.expect_end();
  pair.pairing = op.pairing(pair.psi, pair.psi);
  pair.norm_sq = std::pow(op.norm(pair.psi), 2);
  pair.residual = eigen_residual(op, pair.omega, pair.psi);
  return pair;
}

}  // namespace qpar
