#pragma once

#include <vector>

#include "bdi/louis.hpp"
#include "bdi/model.hpp"
#include "bdi/moments.hpp"

namespace bdi {

struct EMOptions {
  int max_iter = 500;
  double param_tol = 1e-6;   // relative parameter change
  double loglik_tol = 1e-8;  // absolute observed log-likelihood change
  BDIParams init;
  double ci_level = 0.95;
  bool log_scale_ci = false;
  bool compute_info = true;
};

struct FitResult {
  BDIParams params_hat;
  std::vector<double> loglik_trace;  // observed log-likelihood per iteration
  InfoMatrix info;
  std::vector<WaldInterval> ci;
  bool converged = false;
  bool boundary = false;   // an estimated rate hit zero; info/CI not available
  int iterations = 0;
};

// Closed-form M-step for the restricted immigration model:
//   mu = D/P,  lambda = U/(P + beta * T_total).
struct RestrictedMStep {
  double lambda = 0.0, mu = 0.0;
};
RestrictedMStep mstep_restricted(const PanelExpectedStats& stats, double beta, double T_total);

// Closed-form M-step for the death-immigration model: mu = D/P, nu = U/T_total.
struct DeathImmMStep {
  double mu = 0.0, nu = 0.0;
};
DeathImmMStep mstep_death_imm(const PanelExpectedStats& stats, double T_total);

// Exact EM for the restricted-immigration and death-immigration models.
// Convergence requires BOTH the relative parameter change < param_tol AND the
// observed log-likelihood change < loglik_tol.
FitResult fit_em(const PanelData& panel, Variant variant, const EMOptions& opts);
FitResult fit_em(const std::vector<Interval>& intervals, double total_time, Variant variant,
                 const EMOptions& opts);

}  // namespace bdi
