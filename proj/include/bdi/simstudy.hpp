#pragma once

#include <string>
#include <vector>

#include "bdi/em.hpp"
#include "bdi/model.hpp"

namespace bdi::study {

// ---------------------------------------------------------------------------
// Panel simulation protocols.
// ---------------------------------------------------------------------------

// Independent processes observed at uniformly scattered times: initial states
// uniform on {init_low..init_high}, observation times uniform on [0, horizon],
// at least two observations per individual.
struct RandomTimesProtocol {
  int individuals = 100;
  std::int64_t init_low = 1, init_high = 15;
  double horizon = 30.0;
  double mean_extra_obs = 2.87;  // observations per individual = 2 + Poisson(.)
};
PanelData simulate_random_times(const BDIParams& params, const RandomTimesProtocol& proto,
                                RngStream rng);

// Fixed-step observation grid 0, dt, 2 dt, ..., <= horizon.
struct GridProtocol {
  int individuals = 40;
  std::int64_t init_low = 8, init_high = 20;
  double dt = 0.2;
  double horizon = 8.0;
};
PanelData simulate_grid(const BDIParams& params, const GridProtocol& proto, RngStream rng);

// Synthetic clinical-surveillance shape: many subjects, one to three
// follow-ups with short gaps, high starting counts.  Purely synthetic; no
// real genotyping data ships with this repository.
struct SurveillanceProtocol {
  int individuals = 196;
  double mean_gap = 0.35;
  double init_mean = 11.0, init_sd = 5.3;
  std::int64_t init_low = 1, init_high = 22;
};
PanelData simulate_surveillance(const BDIParams& params, const SurveillanceProtocol& proto,
                                RngStream rng);

// ---------------------------------------------------------------------------
// EM-vs-frequent-monitoring comparison study.
// ---------------------------------------------------------------------------

struct CompareFmConfig {
  int replicates = 200;
  std::vector<double> dts = {0.2, 0.4, 0.6};
  GridProtocol grid;  // dt is overridden per scenario
  double true_lambda = 0.07, true_mu = 0.12;
  double em_init_lambda = 0.2, em_init_mu = 0.2;
  double ci_level = 0.95;
  int em_max_iter = 500;
  double em_param_tol = 1e-6, em_loglik_tol = 1e-8;
};

struct CompareFmRow {
  double dt = 0.0;
  int replicate = 0;
  std::string method;  // "em" or "fm"
  double lambda_hat = 0.0, mu_hat = 0.0;
  WaldInterval ci_lambda, ci_mu;
  bool covered_lambda = false, covered_mu = false;
  bool degenerate = false;  // boundary estimate or failed fit; counts as non-covering
};

struct CompareFmCell {
  double dt = 0.0;
  std::string method;
  double coverage_lambda = 0.0, coverage_mu = 0.0;
  double median_lambda = 0.0, median_mu = 0.0;
};

struct CompareFmResult {
  std::vector<CompareFmRow> rows;
  std::vector<CompareFmCell> summary;
};

CompareFmResult run_compare_fm(const CompareFmConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Low-count vs high-count diagnostic: simulate the fitted birth-death model
// over the panel's own initial counts and observation schedules, recording
// per replicate the number of no-change intervals with value below/at-or-above
// the threshold and their summed lengths.
// ---------------------------------------------------------------------------

struct DiagnoseStats {
  std::int64_t n_low = 0, n_high = 0;
  double t_low = 0.0, t_high = 0.0;
};

struct DiagnoseConfig {
  int replicates = 1000;
  std::int64_t threshold = 6;
  double lambda = 0.0, mu = 0.0;  // fitted birth-death rates (nu = 0)
};

struct DiagnoseResult {
  DiagnoseStats observed;
  std::vector<DiagnoseStats> simulated;
  // Fraction of simulated replicates with value <= observed, per statistic
  // (mid-rank convention for ties).
  double rank_n_low = 0.0, rank_n_high = 0.0, rank_t_low = 0.0, rank_t_high = 0.0;
};

DiagnoseResult run_diagnose_lowcount(const PanelData& panel, const DiagnoseConfig& cfg,
                                     std::uint64_t seed);

DiagnoseStats diagnose_stats(const PanelData& panel, std::int64_t threshold);

}  // namespace bdi::study
