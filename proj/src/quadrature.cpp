#include "bdi/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "bdi/common.hpp"

namespace bdi {

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double m, double b,
             double fa, double fm, double fb, double whole, double tol, int depth) {
  if (depth <= 0) throw quadrature_failure("adaptive_simpson: depth limit");
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double s2 = left + right;
  if (std::abs(s2 - whole) <= 15.0 * tol) return s2 + (s2 - whole) / 15.0;
  return adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  // Base subdivision of 8 panels so narrow features are not skipped outright.
  const int n0 = 8;
  const double h = (b - a) / n0;
  double total = 0.0;
  for (int k = 0; k < n0; ++k) {
    const double x0 = a + k * h, x1 = x0 + h, xm = 0.5 * (x0 + x1);
    const double f0 = f(x0), f1 = f(x1), fm = f(xm);
    total += adapt(f, x0, xm, x1, f0, fm, f1, simpson(f0, fm, f1, h), abs_tol / n0,
                   max_depth);
  }
  return total;
}

namespace {

void cdf_adapt(const std::function<double(double)>& f, double a, double m, double b,
               double fa, double fm, double fb, double whole, double tol, int depth,
               double F0, CdfTable& out) {
  if (depth <= 0) throw quadrature_failure("build_cdf: depth limit");
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double s2 = left + right;
  if (std::abs(s2 - whole) <= 15.0 * tol) {
    const double corr = (s2 - whole) / 15.0;
    out.x.push_back(m);
    out.F.push_back(F0 + left + 0.5 * corr);
    out.x.push_back(b);
    out.F.push_back(F0 + s2 + corr);
    return;
  }
  cdf_adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1, F0, out);
  cdf_adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out.F.back(), out);
}

}  // namespace

CdfTable build_cdf(const std::function<double(double)>& f, double a, double b,
                   double abs_tol, int max_depth) {
  CdfTable out;
  out.x.push_back(a);
  out.F.push_back(0.0);
  if (!(b > a)) return out;
  const int n0 = 16;
  const double h = (b - a) / n0;
  for (int k = 0; k < n0; ++k) {
    const double x0 = a + k * h, x1 = x0 + h, xm = 0.5 * (x0 + x1);
    const double f0 = f(x0), f1 = f(x1), fm = f(xm);
    cdf_adapt(f, x0, xm, x1, f0, fm, f1, simpson(f0, fm, f1, h), abs_tol / n0, max_depth,
              out.F.back(), out);
  }
  // Enforce monotonicity against rounding in the running sums.
  for (std::size_t k = 1; k < out.F.size(); ++k)
    out.F[k] = std::max(out.F[k], out.F[k - 1]);
  out.total = out.F.back();
  return out;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw error("Pchip: need >= 2 nodes");
  d_.assign(n, 0.0);
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    if (!(h[k] > 0.0)) throw error("Pchip: nodes must be strictly increasing");
    delta[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  // Fritsch-Carlson: harmonic mean at interior nodes of like-signed slopes.
  d_[0] = delta[0];
  d_[n - 1] = delta[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) {
      d_[k] = 0.0;
    } else {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
  }
  // Clamp end slopes to preserve monotonicity.
  auto clamp_end = [](double& d, double delta0) {
    if (d * delta0 <= 0.0)
      d = 0.0;
    else if (std::abs(d) > 3.0 * std::abs(delta0))
      d = 3.0 * delta0;
  };
  clamp_end(d_[0], delta[0]);
  clamp_end(d_[n - 1], delta[n - 2]);
}

double Pchip::operator()(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t k = std::size_t(it - x_.begin()) - 1;
  const double h = x_[k + 1] - x_[k];
  const double s = (x - x_[k]) / h;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  return h00 * y_[k] + h * h10 * d_[k] + h01 * y_[k + 1] + h * h11 * d_[k + 1];
}

double Pchip::invert(double target, double x_tol) const {
  double lo = x_.front(), hi = x_.back();
  if (target <= y_.front()) return lo;
  if (target >= y_.back()) return hi;
  while (hi - lo > x_tol) {
    const double mid = 0.5 * (lo + hi);
    if ((*this)(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> Cheb::nodes(double a, double b, std::size_t n_plus_1) {
  if (n_plus_1 < 2) throw error("Cheb: need >= 2 nodes");
  const std::size_t n = n_plus_1 - 1;
  std::vector<double> x(n_plus_1);
  for (std::size_t k = 0; k <= n; ++k)
    x[k] = a + 0.5 * (b - a) * (1.0 - std::cos(M_PI * double(k) / double(n)));
  return x;
}

Cheb::Cheb(double a, double b, std::vector<double> node_values)
    : a_(a), b_(b), f_(std::move(node_values)) {
  if (f_.size() < 2) throw error("Cheb: need >= 2 nodes");
  if (!(b > a)) throw error("Cheb: empty interval");
  x_ = nodes(a, b, f_.size());
}

double Cheb::operator()(double x) const {
  const std::size_t n = f_.size() - 1;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double diff = x - x_[k];
    if (std::abs(diff) < 1e-300) return f_[k];
    double w = (k % 2 == 0) ? 1.0 : -1.0;
    if (k == 0 || k == n) w *= 0.5;
    const double g = w / diff;
    num += g * f_[k];
    den += g;
  }
  return num / den;
}

}  // namespace bdi
