// AVX2 sweep: four circle points per iteration, transcendentals from glibc's
// libmvec.  Compiled with -mavx2 -mfma; only dispatched to after a CPUID check.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "bdi/kernel.hpp"

extern "C" {
__m256d _ZGVdN4v_exp(__m256d);
__m256d _ZGVdN4v_log(__m256d);
__m256d _ZGVdN4v_sin(__m256d);
__m256d _ZGVdN4v_cos(__m256d);
__m256d _ZGVdN4vv_atan2(__m256d, __m256d);
}

namespace bdi::kernel {
namespace detail {

namespace {

struct VComplex {
  __m256d re, im;
};

inline VComplex vc_mul(VComplex a, VComplex b) {
  return {_mm256_fmsub_pd(a.re, b.re, _mm256_mul_pd(a.im, b.im)),
          _mm256_fmadd_pd(a.re, b.im, _mm256_mul_pd(a.im, b.re))};
}

inline VComplex vc_mul_const(VComplex a, double bre, double bim) {
  const __m256d vr = _mm256_set1_pd(bre), vi = _mm256_set1_pd(bim);
  return {_mm256_fmsub_pd(a.re, vr, _mm256_mul_pd(a.im, vi)),
          _mm256_fmadd_pd(a.re, vi, _mm256_mul_pd(a.im, vr))};
}

inline VComplex vc_ipow(VComplex base, unsigned e) {
  VComplex r{_mm256_set1_pd(1.0), _mm256_setzero_pd()};
  while (e) {
    if (e & 1u) r = vc_mul(r, base);
    base = vc_mul(base, base);
    e >>= 1;
  }
  return r;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// H for one PointEval at four circle points.
inline VComplex eval_four(const PointEval& pe, VComplex s, double* arg_store) {
  if (pe.lambda_zero) {
    const VComplex base{
        _mm256_fmadd_pd(_mm256_set1_pd(pe.B0), s.re, _mm256_set1_pd(pe.A0)),
        _mm256_mul_pd(_mm256_set1_pd(pe.B0), s.im)};
    const __m256d escale =
        _ZGVdN4v_exp(_mm256_fmadd_pd(_mm256_set1_pd(pe.c1), s.re, _mm256_set1_pd(pe.c0)));
    const __m256d ang = _mm256_mul_pd(_mm256_set1_pd(pe.c1), s.im);
    const VComplex ex{_mm256_mul_pd(escale, _ZGVdN4v_cos(ang)),
                      _mm256_mul_pd(escale, _ZGVdN4v_sin(ang))};
    return vc_mul(vc_ipow(base, unsigned(pe.ipow)), ex);
  }
  const VComplex d1{_mm256_sub_pd(s.re, _mm256_set1_pd(pe.a1.real())),
                    _mm256_sub_pd(s.im, _mm256_set1_pd(pe.a1.imag()))};
  const VComplex d2{_mm256_sub_pd(s.re, _mm256_set1_pd(pe.a2.real())),
                    _mm256_sub_pd(s.im, _mm256_set1_pd(pe.a2.imag()))};
  const VComplex d1E = vc_mul_const(d1, pe.E.real(), pe.E.imag());
  const VComplex g{_mm256_sub_pd(d2.re, d1E.re), _mm256_sub_pd(d2.im, d1E.im)};
  const __m256d den = _mm256_fmadd_pd(g.re, g.re, _mm256_mul_pd(g.im, g.im));
  const __m256d invden = _mm256_div_pd(_mm256_set1_pd(1.0), den);
  const VComplex inv_g{_mm256_mul_pd(g.re, invden),
                       _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), g.im), invden)};
  const VComplex num1 = vc_mul_const(d2, pe.a1.real(), pe.a1.imag());
  const VComplex num2 = vc_mul_const(d1, pe.a2E.real(), pe.a2E.imag());
  const VComplex F1 =
      vc_mul(VComplex{_mm256_sub_pd(num1.re, num2.re), _mm256_sub_pd(num1.im, num2.im)},
             inv_g);
  VComplex H = vc_mul_const(vc_ipow(F1, unsigned(pe.ipow)), pe.c3.real(), pe.c3.imag());
  if (pe.q != 0.0) {
    const VComplex F2 = vc_mul(
        VComplex{_mm256_set1_pd(pe.dalpha.real()), _mm256_set1_pd(pe.dalpha.imag())}, inv_g);
    if (pe.q_integer) {
      H = vc_mul(H, vc_ipow(F2, unsigned(pe.qint)));
    } else {
      const __m256d nrm = _mm256_fmadd_pd(F2.re, F2.re, _mm256_mul_pd(F2.im, F2.im));
      const __m256d lr = _mm256_mul_pd(_mm256_set1_pd(0.5), _ZGVdN4v_log(nrm));
      const __m256d arg = _ZGVdN4vv_atan2(F2.im, F2.re);
      if (arg_store) _mm256_storeu_pd(arg_store, arg);
      const __m256d vq = _mm256_set1_pd(pe.q);
      const __m256d er = _ZGVdN4v_exp(_mm256_mul_pd(vq, lr));
      const __m256d ang = _mm256_mul_pd(vq, arg);
      const VComplex pw{_mm256_mul_pd(er, _ZGVdN4v_cos(ang)),
                        _mm256_mul_pd(er, _ZGVdN4v_sin(ang))};
      H = vc_mul(H, pw);
    }
  }
  return H;
}

}  // namespace

void sweep_avx2(const PointEval* pts, std::size_t n_pts, const double* weights,
                std::size_t n_out, const SweepRange& r, double* sum_re, double* sum_im,
                double* f2_args) {
  const long long mask = (long long)(r.K2 - 1);
  std::vector<__m256d> acc(2 * n_out, _mm256_setzero_pd());
  std::vector<VComplex> H(n_pts);

  const std::size_t n4 = r.count & ~std::size_t(3);
  const __m256i vmask = _mm256_set1_epi64x(mask);
  const __m256i vj = _mm256_set1_epi64x((long long)r.j);

  for (std::size_t m = 0; m < n4; m += 4) {
    const long long i0 = (long long)(r.offset + r.stride * m);
    const long long st = (long long)r.stride;
    const __m256i idx = _mm256_set_epi64x(i0 + 3 * st, i0 + 2 * st, i0 + st, i0);
    const VComplex s{_mm256_i64gather_pd(r.cos_table, idx, 8),
                     _mm256_i64gather_pd(r.sin_table, idx, 8)};
    for (std::size_t p = 0; p < n_pts; ++p) {
      double* arg_store =
          (f2_args && pts[p].needs_guard()) ? f2_args + p * r.count + m : nullptr;
      H[p] = eval_four(pts[p], s, arg_store);
    }
    // idx and j are both < 2^32, so the unsigned 32x32->64 multiply is exact.
    const __m256i ph = _mm256_and_si256(_mm256_mul_epu32(idx, vj), vmask);
    const VComplex phase{_mm256_i64gather_pd(r.cos_table, ph, 8),
                         _mm256_sub_pd(_mm256_setzero_pd(),
                                       _mm256_i64gather_pd(r.sin_table, ph, 8))};
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = weights + o * n_pts;
      VComplex g{_mm256_setzero_pd(), _mm256_setzero_pd()};
      for (std::size_t p = 0; p < n_pts; ++p) {
        const __m256d wp = _mm256_set1_pd(w[p]);
        g.re = _mm256_fmadd_pd(wp, H[p].re, g.re);
        g.im = _mm256_fmadd_pd(wp, H[p].im, g.im);
      }
      const VComplex gp = vc_mul(g, phase);
      acc[2 * o] = _mm256_add_pd(acc[2 * o], gp.re);
      acc[2 * o + 1] = _mm256_add_pd(acc[2 * o + 1], gp.im);
    }
  }

  for (std::size_t o = 0; o < n_out; ++o) {
    sum_re[o] += hsum(acc[2 * o]);
    sum_im[o] += hsum(acc[2 * o + 1]);
  }

  // remainder (sweep counts are multiples of four in practice)
  for (std::size_t m = n4; m < r.count; ++m) {
    const std::size_t idx = r.offset + r.stride * m;
    const std::complex<double> s{r.cos_table[idx], r.sin_table[idx]};
    const std::size_t p_idx = (r.j * idx) & std::size_t(mask);
    const std::complex<double> phase{r.cos_table[p_idx], -r.sin_table[p_idx]};
    std::vector<std::complex<double>> Hs(n_pts);
    for (std::size_t p = 0; p < n_pts; ++p) {
      Hs[p] = eval_point(pts[p], s);
      if (f2_args && pts[p].needs_guard()) {
        const std::complex<double> g = (s - pts[p].a2) - (s - pts[p].a1) * pts[p].E;
        const std::complex<double> F2 = pts[p].dalpha / g;
        f2_args[p * r.count + m] = std::atan2(F2.imag(), F2.real());
      }
    }
    for (std::size_t o = 0; o < n_out; ++o) {
      std::complex<double> g{0.0, 0.0};
      const double* w = weights + o * n_pts;
      for (std::size_t p = 0; p < n_pts; ++p) g += w[p] * Hs[p];
      const std::complex<double> gp = g * phase;
      sum_re[o] += gp.real();
      sum_im[o] += gp.imag();
    }
  }
}

}  // namespace detail
}  // namespace bdi::kernel
