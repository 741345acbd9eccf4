#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "bdi/model.hpp"

namespace bdi {

// ---------------------------------------------------------------------------
// Joint generating function H_i(u, v, w, s, t) = E[u^{N+} v^{N-} e^{-wR} s^{X_t} | X_0 = i]
// in Kendall-style closed form, and the quantities obtained from it by
// evaluating on the complex unit circle and extracting Fourier coefficients
// with single-coefficient Riemann sums.
// ---------------------------------------------------------------------------

struct GFPoint {
  double u = 1.0;
  double v = 1.0;
  double w = 0.0;
  std::complex<double> s{1.0, 0.0};
  double t = 0.0;
};

struct Alphas {
  std::complex<double> alpha1, alpha2;
};

// Roots of the characteristic quadratic (principal square root; alpha1 takes
// the minus sign).  Requires lambda * u > 0.
Alphas compute_alphas(double u, double v, double w, const BDIParams& params);

// Closed-form H.  Throws branch_degenerate when |alpha1 - alpha2| < 1e-12
// (nearly coincident roots); the coefficient-extraction layer substitutes the
// w-shifted Richardson evaluation in that case.
std::complex<double> eval_H(std::int64_t init_state, const GFPoint& p, const BDIParams& params);

// Transition probability p_{ij}(t), extracted as the j-th Fourier coefficient
// of z -> H_i(1,1,0,e^{2*pi*i*z},t).  Values in [-1e-10, 0) are clamped to 0.
// Cached by (i, j, quantized t, params).
double transition_prob(std::int64_t i, std::int64_t j, double t, const BDIParams& params);

void clear_transition_cache();

// Observed-data log-likelihood: sum over intervals of log p_{i,j}(t);
// -inf if any interval probability is <= 0 after clamping.
double loglik_observed(const PanelData& panel, const BDIParams& params);
double loglik_observed(const std::vector<Interval>& intervals, const BDIParams& params);

// Unconditional expectations of (N+, N-, R) at time t from X_0 = i, by central
// finite differences of H at s = 1.
struct MarginalExpectations {
  double up = 0.0, down = 0.0, particle_time = 0.0;
};
MarginalExpectations marginal_expectations(std::int64_t i, double t, const BDIParams& params);

// ---------------------------------------------------------------------------
// Batched coefficient extraction.  Output m is
//     sum_p weights[m][p] * [s^j] H_{init_state}(points[p]; s, t),
// with every output sharing one sweep of the unit circle.  The Riemann sum
// starts at K = 1024 and doubles until two successive estimates of every
// output differ by < 1e-10 * max(1, |estimate|); K capped at 2^20, after which
// inversion_unstable is thrown.  A branch-continuity guard on arg(F2) along
// the circle also raises inversion_unstable.
// ---------------------------------------------------------------------------
namespace gfc {

struct Point {
  double u = 1.0, v = 1.0, w = 0.0;
};

std::vector<double> coeffs(std::int64_t init_state, double t, std::int64_t j,
                           const BDIParams& params,
                           const std::vector<Point>& points,
                           const std::vector<std::vector<double>>& weights);

}  // namespace gfc

}  // namespace bdi
