#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>

namespace bdi::kernel {

// ---------------------------------------------------------------------------
// Inner loop of the generating-function Fourier inversion.
//
// A PointEval holds everything about H_i(u, v, w, ., t) that does not depend
// on s: the quadratic roots, the exponential factors, and the power nu/lambda
// (lambda > 0), or the affine/exponential coefficients (lambda = 0).
//
// A sweep walks equally spaced points of the complex unit circle,
// idx = offset + stride*m, evaluates H at every PointEval, combines them into
// n_out weighted integrands g_out = sum_p weights[out*n_pts+p] * H_p(s_idx),
// and accumulates sum_m g_out(s_idx) * e^{-2*pi*i*j*idx/K2}.  Combining before
// the summation keeps finite-difference cancellation noise from growing with
// the stencil weights.
//
// Two equivalent backends exist: a scalar reference and an AVX2 variant (4
// circle points per iteration, libmvec transcendentals).  The active backend
// is chosen at runtime from CPUID and can be overridden via set_backend or
// the BDI_KERNEL environment variable (values: scalar, avx2).
// ---------------------------------------------------------------------------

struct PointEval {
  bool lambda_zero = false;
  int ipow = 0;  // initial state

  // lambda > 0 branch
  std::complex<double> a1, a2, a2E, E, dalpha, c3;
  double q = 0.0;    // nu / lambda
  int qint = 0;      // q rounded, when q_integer
  bool q_integer = false;

  // lambda = 0 branch: H = (A0 + B0*s)^ipow * exp(c1*s + c0), real coefficients
  double A0 = 0.0, B0 = 0.0, c1 = 0.0, c0 = 0.0;

  // true when the sweep must record arg(F2) for the branch-continuity guard
  bool needs_guard() const { return !lambda_zero && q != 0.0 && !q_integer; }
};

struct SweepRange {
  const double* cos_table = nullptr;  // e^{2*pi*i*m/K2} tables, length K2
  const double* sin_table = nullptr;
  std::size_t K2 = 0;                 // power of two
  std::size_t offset = 0;
  std::size_t stride = 0;
  std::size_t count = 0;
  std::size_t j = 0;                  // coefficient index
};

// Adds the phased sums of the n_out weighted integrands into sum_re/sum_im.
// When f2_args is non-null it has n_pts rows of length count; rows for points
// with needs_guard() receive arg(F2(s_idx)).
using sweep_fn = void (*)(const PointEval* pts, std::size_t n_pts, const double* weights,
                          std::size_t n_out, const SweepRange& range, double* sum_re,
                          double* sum_im, double* f2_args);

enum class Backend { Scalar, Avx2 };

bool backend_supported(Backend b);
Backend active_backend();
void set_backend(Backend b);  // throws bdi::error if unsupported
const char* backend_name(Backend b);

sweep_fn sweep();                // active backend's sweep
sweep_fn sweep_for(Backend b);   // specific backend (equivalence tests)

// Single-point evaluation of H given a prepared PointEval (reference path,
// also used by eval_H).
std::complex<double> eval_point(const PointEval& pe, std::complex<double> s);

}  // namespace bdi::kernel
