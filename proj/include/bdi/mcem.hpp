#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "bdi/em.hpp"
#include "bdi/model.hpp"
#include "bdi/sampler.hpp"

namespace bdi {

// ---------------------------------------------------------------------------
// Ascent-based Monte Carlo EM for the unconstrained (lambda, mu, nu) model.
// The E-step averages sufficient statistics over endpoint-conditioned path
// draws; the M-step solves mu in closed form and profiles nu out of the
// (lambda, nu) problem along the constraint -P*lambda - T*nu + U = 0.  After
// each M-step the gain dQ in the Monte Carlo expected complete-data
// log-likelihood is estimated from the same path sample; if its lower
// confidence bound is negative the Monte Carlo size grows and the iteration
// repeats (Caffo-Jank-Jones rule).
// ---------------------------------------------------------------------------

struct MCExpectedStats {
  double U_total = 0.0, D_total = 0.0, P_total = 0.0;
  double U_se = 0.0, D_se = 0.0, P_se = 0.0;
  std::map<std::int64_t, double> upjump_means_by_state;  // summed over intervals
  std::map<std::int64_t, double> upjump_se_by_state;
  std::int64_t n_paths_per_interval = 0;
};

struct MCEMOptions {
  std::int64_t n_initial = 100;
  double ascent_confidence = 0.9;  // gamma
  double growth = 1.5;
  std::int64_t max_paths = 100000;  // per interval
  int max_iter = 60;
  double stop_tol = 1e-3;  // stop when UCB(dQ) falls below this
  BDIParams init = BDIParams::full(0.2, 0.2, 0.2);
  double ci_level = 0.95;
  bool log_scale_ci = false;
  bool compute_info = true;
  std::int64_t info_paths = 2000;
  SamplerOptions sampler;
  std::ostream* telemetry = nullptr;  // JSON lines, one per E/M cycle
};

MCExpectedStats estep_mc(const std::vector<Interval>& intervals, const BDIParams& params,
                         std::int64_t n_paths, RngStream rng);
MCExpectedStats estep_mc(const PanelData& panel, const BDIParams& params,
                         std::int64_t n_paths, RngStream rng);

// Constrained M-step.  mu = D/P; lambda maximizes the profiled objective over
// [0, U/P] by safeguarded Newton; nu = (U - P*lambda)/T >= 0.
struct FullMStep {
  double lambda = 0.0, mu = 0.0, nu = 0.0;
  bool boundary = false;  // no interior stationary point (flagged, not fatal)
};
FullMStep mstep_full(const MCExpectedStats& stats, double T_total);

struct McemIterDiag {
  int iteration = 0;
  std::int64_t n_paths = 0;
  double delta_q = 0.0;
  double delta_q_se = 0.0;
  double loglik = 0.0;
  BDIParams params;
};

FitResult fit_mcem(const PanelData& panel, const MCEMOptions& opts, RngStream rng,
                   std::vector<McemIterDiag>* diagnostics = nullptr);
FitResult fit_mcem(const std::vector<Interval>& intervals, double total_time,
                   const MCEMOptions& opts, RngStream rng,
                   std::vector<McemIterDiag>* diagnostics = nullptr);

}  // namespace bdi
