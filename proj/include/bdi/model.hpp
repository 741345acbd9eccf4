#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bdi/common.hpp"

namespace bdi {

// ---------------------------------------------------------------------------
// Parameters of a linear birth-death-immigration process: per-particle birth
// rate lambda, per-particle death rate mu, constant immigration rate nu.
// Three variants are supported:
//   Full                  -- (lambda, mu, nu) free,
//   RestrictedImmigration -- nu = beta * lambda for a known beta,
//   DeathImmigration      -- lambda = 0.
// ---------------------------------------------------------------------------

enum class Variant { Full, RestrictedImmigration, DeathImmigration };

struct BDIParams {
  double lambda = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  Variant variant = Variant::Full;
  double beta = 0.0;  // only meaningful for RestrictedImmigration

  static BDIParams full(double lambda, double mu, double nu) {
    return {lambda, mu, nu, Variant::Full, 0.0};
  }
  static BDIParams restricted(double lambda, double mu, double beta) {
    return {lambda, mu, beta * lambda, Variant::RestrictedImmigration, beta};
  }
  static BDIParams death_immigration(double mu, double nu) {
    return {0.0, mu, nu, Variant::DeathImmigration, 0.0};
  }
};

// Returns params unchanged iff all invariants hold, otherwise throws
// negative_rate or variant_violation.
const BDIParams& validate_params(const BDIParams& params);

std::string variant_name(Variant v);

// ---------------------------------------------------------------------------
// Panel data: per-individual observation series of (time, count).
// ---------------------------------------------------------------------------

struct ObservationSeries {
  std::string id;
  std::vector<double> times;        // strictly increasing, nonnegative
  std::vector<std::int64_t> counts; // nonnegative, same length as times (>= 2)
};

struct PanelData {
  std::vector<ObservationSeries> individuals;

  // Sum over individuals of (last time - first time).
  double total_time() const;
  std::size_t interval_count() const;
};

const PanelData& validate_panel(const PanelData& panel);

// One observation gap, reduced by homogeneity to (start state, end state, length).
struct Interval {
  std::int64_t start_state = 0;
  std::int64_t end_state = 0;
  double length = 0.0;
};

// One Interval per consecutive observation pair per individual, ordered by
// individual id then time.
std::vector<Interval> intervals_from_panel(const PanelData& panel);

// ---------------------------------------------------------------------------
// Complete BDI path over [0, horizon]: initial state plus ordered jumps.
// ---------------------------------------------------------------------------

struct Jump {
  double time = 0.0;
  int direction = 0;  // +1 or -1
};

struct Trajectory {
  std::int64_t initial_state = 0;
  std::vector<Jump> jumps;  // times strictly increasing within (0, horizon)
  double horizon = 0.0;

  std::int64_t final_state() const;
  std::int64_t state_at(double t) const;  // right-continuous
};

const Trajectory& validate_trajectory(const Trajectory& traj);

// Sufficient statistics of a complete path: total jumps up/down, particle-time
// R = int_0^T X_s ds, and up-jump counts keyed by departing state.
struct SufficientStats {
  std::int64_t n_plus = 0;
  std::int64_t n_minus = 0;
  double particle_time = 0.0;
  std::map<std::int64_t, std::int64_t> upjumps_by_state;

  SufficientStats& operator+=(const SufficientStats& other);
};

SufficientStats sufficient_stats(const Trajectory& traj);

// Complete-data log-likelihood for the given variant, additive constants
// dropped.  Impossible jumps under `params` give -inf rather than an error.
double loglik_complete(const Trajectory& traj, const BDIParams& params);
double loglik_complete(const SufficientStats& stats, double horizon, const BDIParams& params);

}  // namespace bdi
