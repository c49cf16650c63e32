#include <array>
#include <cmath>
#include <numbers>

#include "qpar/eigensolve.hpp"

namespace qpar {

namespace {

constexpr double kBoundaryFloor = 1e-12;
constexpr double kMaxStep = std::numbers::pi / 4.0;

class ContourCounter {
 public:
  explicit ContourCounter(const LayeredProfile1D& p) : prof_(p) {}

  cplx eval(cplx z) const {
    const cplx f = dispersion_1d(prof_, z);
    if (std::abs(f) <= kBoundaryFloor) throw BoundaryZero(z, "dispersion zero on a contour");
    return f;
  }

  // Total change of arg f along the straight segment a -> b.
  double segment(cplx a, cplx b) const {
    constexpr int samples = 32;
    double total = 0.0;
    cplx za = a, fa = eval(a);
    for (int s = 1; s <= samples; ++s) {
      const cplx zb = a + (b - a) * (double(s) / samples);
      const cplx fb = eval(zb);
      total += refine(za, zb, fa, fb, 0);
      za = zb;
      fa = fb;
    }
    return total;
  }

  double rect(const Rect& r) const {
    const std::array<cplx, 4> c{cplx(r.re_min, r.im_min), cplx(r.re_max, r.im_min),
                                cplx(r.re_max, r.im_max), cplx(r.re_min, r.im_max)};
    double total = 0.0;
    for (int s = 0; s < 4; ++s) total += segment(c[s], c[(s + 1) % 4]);
    return total;
  }

 private:
  double refine(cplx a, cplx b, cplx fa, cplx fb, int depth) const {
    const double d = std::arg(fb / fa);
    if (std::abs(d) <= kMaxStep) return d;
    if (depth > 48 || std::abs(b - a) < 1e-14 * (1.0 + std::abs(a)))
      throw BoundaryZero(0.5 * (a + b), "argument jump on a contour; zero too close");
    const cplx m = 0.5 * (a + b);
    const cplx fm = eval(m);
    return refine(a, m, fa, fm, depth + 1) + refine(m, b, fm, fb, depth + 1);
  }

  const LayeredProfile1D& prof_;
};

int to_count(double total_arg) {
  return int(std::lround(total_arg / (2.0 * std::numbers::pi)));
}

bool inside(const Rect& r, cplx z, double slack) {
  return z.real() >= r.re_min - slack && z.real() <= r.re_max + slack &&
         z.imag() >= r.im_min - slack && z.imag() <= r.im_max + slack;
}

void locate(const LayeredProfile1D& prof, const ContourCounter& cc, const Rect& r, int n,
            int depth, std::vector<Root1D>& out) {
  if (n <= 0) return;
  const double wre = r.re_max - r.re_min, wim = r.im_max - r.im_min;
  const double width = std::max(wre, wim);
  const cplx center(0.5 * (r.re_min + r.re_max), 0.5 * (r.im_min + r.im_max));
  if (n == 1) {
    if (auto z = refine_root_1d(prof, center); z && inside(r, *z, 1e-12 * (1.0 + width))) {
      out.push_back({*z, 1});
      return;
    }
  }
  if (width < 1e-9 || depth > 80) {
    const auto z = refine_root_1d(prof, center);
    out.push_back({z.value_or(center), n});
    return;
  }
  static constexpr std::array<double, 6> fractions{0.5, 0.5137, 0.4781, 0.5419, 0.4523, 0.5711};
  for (double t : fractions) {
    Rect a = r, b = r;
    if (wre >= wim) {
      const double x = r.re_min + t * wre;
      a.re_max = x;
      b.re_min = x;
    } else {
      const double y = r.im_min + t * wim;
      a.im_max = y;
      b.im_min = y;
    }
    int na = 0, nb = 0;
    try {
      na = to_count(cc.rect(a));
      nb = to_count(cc.rect(b));
    } catch (const BoundaryZero&) {
      continue;
    }
    if (na + nb != n) continue;
    locate(prof, cc, a, na, depth + 1, out);
    locate(prof, cc, b, nb, depth + 1, out);
    return;
  }
  throw BoundaryZero(center, "could not split a rectangle away from zeros");
}

}  // namespace

std::optional<cplx> refine_root_1d(const LayeredProfile1D& profile, cplx guess, double ftol,
                                   int max_iter) {
  cplx z = guess;
  for (int it = 0; it < max_iter; ++it) {
    const cplx f = dispersion_1d(profile, z);
    if (std::abs(f) <= ftol) return z;
    const double h = 1e-6 * (1.0 + std::abs(z));
    const cplx df = (dispersion_1d(profile, z + h) - dispersion_1d(profile, z - h)) / (2.0 * h);
    if (std::abs(df) == 0.0) return std::nullopt;
    cplx step = f / df;
    const double cap = 0.5 * (1.0 + std::abs(z));
    if (std::abs(step) > cap) step *= cap / std::abs(step);
    z -= step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
  }
  return std::abs(dispersion_1d(profile, z)) <= ftol ? std::optional<cplx>(z) : std::nullopt;
}

int winding_number(const LayeredProfile1D& profile, const Rect& rect) {
  return to_count(ContourCounter(profile).rect(rect));
}

std::vector<Root1D> roots_1d(const LayeredProfile1D& profile, const Rect& rect) {
  const ContourCounter cc(profile);
  const int n = to_count(cc.rect(rect));
  std::vector<Root1D> out;
  locate(profile, cc, rect, n, 0, out);
  std::sort(out.begin(), out.end(), [](const Root1D& a, const Root1D& b) {
    return a.omega.real() < b.omega.real() ||
           (a.omega.real() == b.omega.real() && a.omega.imag() < b.omega.imag());
  });
  return out;
}

}  // namespace qpar
