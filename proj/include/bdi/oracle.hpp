#pragma once

#include <cstdint>
#include <vector>

#include "bdi/common.hpp"
#include "bdi/model.hpp"

namespace bdi::oracle {

// Brute-force reference implementations used by the test suite and shipped so
// the frozen expected values in the tests stay reproducible.  None of these
// touch the generating-function inversion; the only stochastic one uses plain
// forward simulation with accept-reject.

struct TruncationSpec {
  int max_state = 200;
  double tail_mass_bound = 1e-12;
};

// Row i of exp(Q t) for the birth-death-immigration generator truncated to
// {0..max_state}; throws truncation_too_small when mass accumulates near the
// absorbing boundary.
std::vector<double> uniformization_row(std::int64_t i, double t, const BDIParams& params,
                                       const TruncationSpec& trunc = {});

// Column j of exp(Q t): row j of the transposed-generator series.
std::vector<double> uniformization_col(std::int64_t j, double t, const BDIParams& params,
                                       const TruncationSpec& trunc = {});

double uniformization_transition(std::int64_t i, std::int64_t j, double t,
                                 const BDIParams& params, const TruncationSpec& trunc = {});

// Restricted moments (U~, D~, P~) by convolution quadrature over
// uniformization probabilities, e.g.
//   U~_{ij}(t) = sum_k int_0^t p_{ik}(tau) (k lambda + nu) p_{k+1,j}(t - tau) dtau.
struct RestrictedMoments {
  double up = 0.0, down = 0.0, particle_time = 0.0;
};
RestrictedMoments convolution_restricted_moments(std::int64_t i, std::int64_t j, double t,
                                                 const BDIParams& params,
                                                 const TruncationSpec& trunc = {},
                                                 double quad_tol = 1e-9);

// Monte Carlo estimates of conditional moments of (N+, N-, R) given
// X_0 = i, X_t = j, via accept-reject over forward simulations.
struct McMoment {
  double mean = 0.0;
  double se = 0.0;
};
struct McConditionalStats {
  McMoment up, down, particle_time;
  McMoment up_sq, down_sq, particle_time_sq;
  McMoment up_down, up_pt, down_pt;
  std::int64_t accepted = 0;
  std::int64_t attempts = 0;
};
McConditionalStats mc_conditional_stats(std::int64_t i, std::int64_t j, double t,
                                        const BDIParams& params, std::int64_t n_accepted,
                                        RngStream rng,
                                        std::int64_t max_attempts = -1);

}  // namespace bdi::oracle
