#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bdi::cli {

// Exit codes: 0 success, 1 input parse error, 2 validation/config error,
// 3 fit did not converge (result still written).
enum ExitCode : int { kOk = 0, kParseError = 1, kValidationError = 2, kNotConverged = 3 };

struct RunConfig {
  std::string command;

  // shared
  std::string model = "restricted";  // restricted | death-immigration | full
  double beta = 1.2;
  std::vector<double> init;  // restricted: lambda,mu; death-immigration: mu,nu; full: lambda,mu,nu
  std::uint64_t seed = 0;
  bool seed_set = false;
  int max_iter = 500;
  double param_tol = 1e-6;
  double loglik_tol = 1e-8;
  std::int64_t mc_initial = 100;
  std::int64_t mc_max_paths = 100000;
  double ci_level = 0.95;
  bool log_scale_ci = false;
  std::string in_path, out_path;
  std::string telemetry_path;

  // simulate
  std::string protocol = "random-times";  // random-times | grid | surveillance
  double sim_lambda = 0.07, sim_mu = 0.12, sim_nu = 0.0;
  int individuals = 100;
  double horizon = 30.0;
  double dt = 0.2;
  std::int64_t init_low = 1, init_high = 15;
  double mean_extra_obs = 2.87;
  double mean_gap = 0.35;

  // compare-fm
  int replicates = 200;
  std::vector<double> dts = {0.2, 0.4, 0.6};

  // diagnose-lowcount
  int diag_replicates = 1000;
  std::int64_t threshold = 6;
  double diag_lambda = 0.027, diag_mu = 0.031;
};

int run_fit(const RunConfig& cfg);
int run_simulate(const RunConfig& cfg);
int run_compare_fm(const RunConfig& cfg);
int run_diagnose_lowcount(const RunConfig& cfg);

// Dispatch on cfg.command; exceptions are mapped to exit codes.
int dispatch(const RunConfig& cfg);

}  // namespace bdi::cli
