#pragma once

#include <cstdint>
#include <vector>

#include "bdi/louis.hpp"
#include "bdi/model.hpp"

namespace bdi {

// ---------------------------------------------------------------------------
// Frequent-monitoring approximate likelihood for the birth-death model
// (nu = 0): each observed interval is mapped to at most one event.  Intervals
// whose endpoints differ by more than one, and intervals starting at state 0,
// are excluded and counted.
// ---------------------------------------------------------------------------

struct FMInterval {
  std::int64_t start_state = 0;  // >= 1
  int delta = 0;                 // -1, 0, +1
  double length = 0.0;
};

struct FMData {
  std::vector<FMInterval> usable;
  std::int64_t excluded_multistep = 0;  // |delta| > 1
  std::int64_t excluded_zero_start = 0; // start state 0
};

// retain_zero_start keeps 0 -> 0 intervals as uninformative rows instead of
// excluding them (they contribute zero log-likelihood either way).
FMData fm_data_from_intervals(const std::vector<Interval>& intervals,
                              bool retain_zero_start = false);

// Log-probability of one interval's event under the frequent-monitoring
// approximation: with lam_i = i (lambda + mu),
//   delta = 0:  -lam_i t,
//   delta = +1: log[(i lambda / lam_i)(1 - e^{-lam_i t})],
//   delta = -1: log[(i mu / lam_i)(1 - e^{-lam_i t})].
double fm_interval_loglik(std::int64_t i, int delta, double t, double lambda, double mu);

double fm_loglik(const FMData& data, double lambda, double mu);

struct FMFit {
  double lambda = 0.0, mu = 0.0;
  std::vector<WaldInterval> ci;  // (lambda, mu)
  InfoMatrix info;
  std::int64_t excluded = 0;
  bool boundary = false;
};

// Maximizes the FM log-likelihood by safeguarded 2-D Newton with the analytic
// gradient; Wald CIs from the central-difference Hessian at the maximum.
FMFit fm_fit(const std::vector<Interval>& intervals, double ci_level = 0.95,
             bool retain_zero_start = false);
FMFit fm_fit(const PanelData& panel, double ci_level = 0.95, bool retain_zero_start = false);

}  // namespace bdi
