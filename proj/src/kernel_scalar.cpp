#include <cmath>
#include <complex>
#include <vector>

#include "bdi/kernel.hpp"

namespace bdi::kernel {

namespace {

inline std::complex<double> ipow(std::complex<double> base, unsigned e) {
  std::complex<double> r{1.0, 0.0};
  while (e) {
    if (e & 1u) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

inline std::complex<double> eval_one(const PointEval& pe, std::complex<double> s,
                                     double* arg_out) {
  if (pe.lambda_zero) {
    const std::complex<double> base{pe.A0 + pe.B0 * s.real(), pe.B0 * s.imag()};
    const double escale = std::exp(pe.c1 * s.real() + pe.c0);
    const double ang = pe.c1 * s.imag();
    return ipow(base, unsigned(pe.ipow)) *
           std::complex<double>{escale * std::cos(ang), escale * std::sin(ang)};
  }
  const std::complex<double> d1 = s - pe.a1;
  const std::complex<double> d2 = s - pe.a2;
  const std::complex<double> g = d2 - d1 * pe.E;
  const std::complex<double> inv_g = 1.0 / g;
  const std::complex<double> F1 = (pe.a1 * d2 - pe.a2E * d1) * inv_g;
  std::complex<double> H = ipow(F1, unsigned(pe.ipow)) * pe.c3;
  if (pe.q != 0.0) {
    const std::complex<double> F2 = pe.dalpha * inv_g;
    if (pe.q_integer) {
      H *= ipow(F2, unsigned(pe.qint));
    } else {
      const double lr = 0.5 * std::log(std::norm(F2));
      const double arg = std::atan2(F2.imag(), F2.real());
      if (arg_out) *arg_out = arg;
      const double er = std::exp(pe.q * lr);
      const double ang = pe.q * arg;
      H *= std::complex<double>{er * std::cos(ang), er * std::sin(ang)};
    }
  }
  return H;
}

}  // namespace

std::complex<double> eval_point(const PointEval& pe, std::complex<double> s) {
  return eval_one(pe, s, nullptr);
}

namespace detail {

void sweep_scalar(const PointEval* pts, std::size_t n_pts, const double* weights,
                  std::size_t n_out, const SweepRange& r, double* sum_re, double* sum_im,
                  double* f2_args) {
  const std::size_t mask = r.K2 - 1;
  std::vector<std::complex<double>> acc(n_out, {0.0, 0.0});
  std::vector<std::complex<double>> H(n_pts);
  for (std::size_t m = 0; m < r.count; ++m) {
    const std::size_t idx = r.offset + r.stride * m;
    const std::complex<double> s{r.cos_table[idx], r.sin_table[idx]};
    for (std::size_t p = 0; p < n_pts; ++p) {
      double* arg_out = (f2_args && pts[p].needs_guard()) ? f2_args + p * r.count + m : nullptr;
      H[p] = eval_one(pts[p], s, arg_out);
    }
    const std::size_t ph = (r.j * idx) & mask;
    const std::complex<double> phase{r.cos_table[ph], -r.sin_table[ph]};
    for (std::size_t o = 0; o < n_out; ++o) {
      std::complex<double> g{0.0, 0.0};
      const double* w = weights + o * n_pts;
      for (std::size_t p = 0; p < n_pts; ++p) g += w[p] * H[p];
      acc[o] += g * phase;
    }
  }
  for (std::size_t o = 0; o < n_out; ++o) {
    sum_re[o] += acc[o].real();
    sum_im[o] += acc[o].imag();
  }
}

}  // namespace detail

}  // namespace bdi::kernel
