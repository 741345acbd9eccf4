#pragma once

#include <cstdint>
#include <vector>

#include "bdi/genfun.hpp"
#include "bdi/model.hpp"

namespace bdi {

// ---------------------------------------------------------------------------
// Restricted and conditional moments of (N+, N-, R) given the endpoints of an
// interval, obtained from finite-difference stencils of H on the unit circle.
// "Restricted" means joint with the endpoint event, e.g.
//   U~_{ij}(t) = E[N+_t 1{X_t=j} | X_0=i];
// dividing by p_{ij}(t) gives the conditional expectation.
// ---------------------------------------------------------------------------

enum class MomentKind {
  Up, Down, ParticleTime,           // first moments
  UpSq, DownSq, ParticleTimeSq,     // second moments (factorial correction applied)
  UpDown, UpParticleTime, DownParticleTime
};

double restricted_moment(MomentKind kind, std::int64_t i, std::int64_t j, double t,
                         const BDIParams& params);

struct IntervalMoments {
  double p = 0.0;        // transition probability of the interval
  double U = 0.0, D = 0.0, P = 0.0;
  // conditional second and cross moments
  double up_sq = 0.0, down_sq = 0.0, pt_sq = 0.0;
  double up_down = 0.0, up_pt = 0.0, down_pt = 0.0;
};

// First conditional moments (U, D, P); with_second adds the six second/cross
// moments needed for the Louis information.
IntervalMoments conditional_moments(std::int64_t i, std::int64_t j, double t,
                                    const BDIParams& params, bool with_second);

struct ConditionalExpectations {
  double U = 0.0, D = 0.0, P = 0.0;
};
ConditionalExpectations conditional_expectations(std::int64_t i, std::int64_t j, double t,
                                                 const BDIParams& params);

// ---------------------------------------------------------------------------
// Panel aggregation: the exact E-step.
// ---------------------------------------------------------------------------

struct PanelIntervalStats {
  Interval interval;
  double p = 0.0;
  double U = 0.0, D = 0.0, P = 0.0;
};

struct PanelExpectedStats {
  double U_total = 0.0, D_total = 0.0, P_total = 0.0;
  std::vector<PanelIntervalStats> per_interval;
  double loglik = 0.0;  // observed log-likelihood at the same parameters
};

PanelExpectedStats panel_expected_stats(const std::vector<Interval>& intervals,
                                        const BDIParams& params);
PanelExpectedStats panel_expected_stats(const PanelData& panel, const BDIParams& params);

// Per-interval full moment sets at a fixed parameter (used by info-louis);
// computed with one circle sweep per unique (i, j, t).
std::vector<IntervalMoments> panel_interval_moments(const std::vector<Interval>& intervals,
                                                    const BDIParams& params);

}  // namespace bdi
