#pragma once

#include <cstdint>

#include "bdi/common.hpp"

namespace bdi::special {

// ---------------------------------------------------------------------------
// Closed-form restricted moments for two special models where the E-step
// needs no numerical approximation at all.
// ---------------------------------------------------------------------------

// Death-immigration model (lambda = 0):
//   E[N+_t 1{X_t=j} | X_0=i]
// as a finite binomial/Poisson-convolution sum.  Requires mu > 0, t > 0.
double dimm_restricted_up(std::int64_t i, std::int64_t j, double t, double mu, double nu);

struct DownAndPt {
  double down = 0.0;
  double particle_time = 0.0;
};

// E[N-_t 1{X_t=j} | X_0=i] and E[R_t 1{X_t=j} | X_0=i] for lambda = 0, derived
// by the same expansion applied to the v- and w-derivatives of the generating
// function.
DownAndPt dimm_restricted_down_and_pt(std::int64_t i, std::int64_t j, double t, double mu,
                                      double nu);

// ---------------------------------------------------------------------------
// TKF91 sequence-alignment reductions: the two boundary cases whose expected
// sufficient statistics are available analytically.
// ---------------------------------------------------------------------------

enum class TKFVariant {
  StartZeroNuEqualsLambda,  // X_0 = 0, nu = lambda
  StartOneNuZero            // X_0 = 1, nu = 0
};

struct TKFCase {
  TKFVariant variant = TKFVariant::StartZeroNuEqualsLambda;
  std::int64_t j = 0;   // end state
  double t = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
};

// E[N+_t 1{X_t=j} | X_0=.], evaluated from the printed quotient-rule closed
// forms.  Near-coincident rates are handled by evaluating at
// lambda(1 +- 1e-3) and averaging, which cancels the odd pole terms.
double tkf_expected_up(const TKFCase& c);

struct TKFMoments {
  double up = 0.0;
  double down = 0.0;
  double particle_time = 0.0;
};

// All three restricted moments; down and particle-time come from the
// logarithmic-derivative form of the same coefficient functions.
TKFMoments tkf_expected_moments(const TKFCase& c);

}  // namespace bdi::special
