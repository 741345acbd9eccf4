#include "bdi/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "bdi/fm.hpp"
#include "bdi/genfun.hpp"
#include "bdi/mcem.hpp"
#include "bdi/panel_io.hpp"
#include "bdi/simstudy.hpp"

namespace bdi::cli {

namespace {

using nlohmann::json;

json config_echo(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["model"] = cfg.model;
  j["beta"] = cfg.beta;
  j["init"] = cfg.init;
  if (cfg.seed_set) j["seed"] = cfg.seed;
  j["max_iter"] = cfg.max_iter;
  j["param_tol"] = cfg.param_tol;
  j["loglik_tol"] = cfg.loglik_tol;
  j["mc_initial"] = cfg.mc_initial;
  j["ci_level"] = cfg.ci_level;
  j["in"] = cfg.in_path;
  j["out"] = cfg.out_path;
  return j;
}

json ci_json(const WaldInterval& ci) { return json::array({ci.lo, ci.hi}); }

json info_json(const InfoMatrix& info) {
  json j;
  j["params"] = info.param_names;
  j["matrix"] = info.entries;
  if (!info.mc_se.empty()) j["mc_se"] = info.mc_se;
  return j;
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw error("cannot open output file: " + path);
  out << body;
}

void require_seed(const RunConfig& cfg) {
  if (!cfg.seed_set) throw validation_error("--seed is required for stochastic commands");
}

BDIParams init_params_for_model(const RunConfig& cfg) {
  if (cfg.model == "restricted") {
    if (cfg.init.size() != 2)
      throw validation_error("restricted model expects --init lambda,mu");
    return BDIParams::restricted(cfg.init[0], cfg.init[1], cfg.beta);
  }
  if (cfg.model == "death-immigration") {
    if (cfg.init.size() != 2)
      throw validation_error("death-immigration model expects --init mu,nu");
    return BDIParams::death_immigration(cfg.init[0], cfg.init[1]);
  }
  if (cfg.model == "full") {
    if (cfg.init.size() != 3)
      throw validation_error("full model expects --init lambda,mu,nu");
    return BDIParams::full(cfg.init[0], cfg.init[1], cfg.init[2]);
  }
  throw validation_error("unknown model '" + cfg.model + "'");
}

}  // namespace

int run_fit(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  PanelData panel;
  try {
    panel = read_panel_csv_file(cfg.in_path);
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }

  json out;
  out["schema"] = "bdem/fit-result/v1";
  out["config"] = config_echo(cfg);
  out["n_individuals"] = panel.individuals.size();
  out["n_intervals"] = panel.interval_count();

  bool converged = false;
  const BDIParams init = init_params_for_model(cfg);
  if (cfg.model == "full") {
    require_seed(cfg);
    MCEMOptions opts;
    opts.init = init;
    opts.n_initial = cfg.mc_initial;
    opts.max_paths = cfg.mc_max_paths;
    opts.max_iter = cfg.max_iter;
    opts.ci_level = cfg.ci_level;
    opts.log_scale_ci = cfg.log_scale_ci;
    std::ofstream telemetry;
    if (!cfg.telemetry_path.empty()) {
      telemetry.open(cfg.telemetry_path);
      if (!telemetry) throw error("cannot open telemetry file: " + cfg.telemetry_path);
      opts.telemetry = &telemetry;
    }
    const FitResult fit = fit_mcem(panel, opts, RngStream(cfg.seed));
    converged = fit.converged;
    out["estimates"] = {{"lambda", fit.params_hat.lambda},
                        {"mu", fit.params_hat.mu},
                        {"nu", fit.params_hat.nu}};
    if (fit.ci.size() == 3)
      out["ci"] = {{"lambda", ci_json(fit.ci[0])},
                   {"mu", ci_json(fit.ci[1])},
                   {"nu", ci_json(fit.ci[2])}};
    if (!fit.info.entries.empty()) out["information"] = info_json(fit.info);
    out["loglik_trace"] = fit.loglik_trace;
    out["iterations"] = fit.iterations;
    out["converged"] = fit.converged;
    out["boundary"] = fit.boundary;
  } else {
    const Variant variant = cfg.model == "restricted" ? Variant::RestrictedImmigration
                                                      : Variant::DeathImmigration;
    EMOptions opts;
    opts.init = init;
    opts.max_iter = cfg.max_iter;
    opts.param_tol = cfg.param_tol;
    opts.loglik_tol = cfg.loglik_tol;
    opts.ci_level = cfg.ci_level;
    opts.log_scale_ci = cfg.log_scale_ci;
    const FitResult fit = fit_em(panel, variant, opts);
    converged = fit.converged;
    if (variant == Variant::RestrictedImmigration) {
      out["estimates"] = {{"lambda", fit.params_hat.lambda},
                          {"mu", fit.params_hat.mu},
                          {"nu", fit.params_hat.nu}};
      if (fit.ci.size() == 2)
        out["ci"] = {{"lambda", ci_json(fit.ci[0])}, {"mu", ci_json(fit.ci[1])}};
    } else {
      out["estimates"] = {{"mu", fit.params_hat.mu}, {"nu", fit.params_hat.nu}};
      if (fit.ci.size() == 2)
        out["ci"] = {{"mu", ci_json(fit.ci[0])}, {"nu", ci_json(fit.ci[1])}};
    }
    if (!fit.info.entries.empty()) out["information"] = info_json(fit.info);
    out["loglik_trace"] = fit.loglik_trace;
    out["iterations"] = fit.iterations;
    out["converged"] = fit.converged;
    out["boundary"] = fit.boundary;
  }

  write_text_file(cfg.out_path, out.dump(2) + "\n");
  const auto stop = std::chrono::steady_clock::now();
  std::cerr << "fit wall time: "
            << std::chrono::duration<double>(stop - start).count() << " s\n";
  return converged ? kOk : kNotConverged;
}

int run_simulate(const RunConfig& cfg) {
  require_seed(cfg);
  const BDIParams params = BDIParams::full(cfg.sim_lambda, cfg.sim_mu, cfg.sim_nu);
  PanelData panel;
  RngStream rng(cfg.seed);
  if (cfg.protocol == "random-times") {
    study::RandomTimesProtocol proto;
    proto.individuals = cfg.individuals;
    proto.init_low = cfg.init_low;
    proto.init_high = cfg.init_high;
    proto.horizon = cfg.horizon;
    proto.mean_extra_obs = cfg.mean_extra_obs;
    panel = study::simulate_random_times(params, proto, rng);
  } else if (cfg.protocol == "grid") {
    study::GridProtocol proto;
    proto.individuals = cfg.individuals;
    proto.init_low = cfg.init_low;
    proto.init_high = cfg.init_high;
    proto.dt = cfg.dt;
    proto.horizon = cfg.horizon;
    panel = study::simulate_grid(params, proto, rng);
  } else if (cfg.protocol == "surveillance") {
    study::SurveillanceProtocol proto;
    proto.individuals = cfg.individuals;
    proto.mean_gap = cfg.mean_gap;
    proto.init_low = cfg.init_low;
    proto.init_high = cfg.init_high;
    panel = study::simulate_surveillance(params, proto, rng);
  } else {
    throw validation_error("unknown protocol '" + cfg.protocol + "'");
  }
  write_panel_csv_file(cfg.out_path, panel);
  return kOk;
}

int run_compare_fm(const RunConfig& cfg) {
  require_seed(cfg);
  study::CompareFmConfig scfg;
  scfg.replicates = cfg.replicates;
  scfg.dts = cfg.dts;
  scfg.true_lambda = cfg.sim_lambda;
  scfg.true_mu = cfg.sim_mu;
  scfg.grid.individuals = cfg.individuals;
  scfg.grid.init_low = cfg.init_low;
  scfg.grid.init_high = cfg.init_high;
  scfg.grid.horizon = cfg.horizon;
  scfg.ci_level = cfg.ci_level;
  scfg.em_max_iter = cfg.max_iter;
  scfg.em_param_tol = cfg.param_tol;
  scfg.em_loglik_tol = cfg.loglik_tol;
  const study::CompareFmResult result = study::run_compare_fm(scfg, cfg.seed);

  std::string csv = "dt,replicate,method,lambda_hat,mu_hat,ci_lambda_lo,ci_lambda_hi,"
                    "ci_mu_lo,ci_mu_hi,covered_lambda,covered_mu,degenerate\n";
  char buf[320];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n",
                  r.dt, r.replicate, r.method.c_str(), r.lambda_hat, r.mu_hat, r.ci_lambda.lo,
                  r.ci_lambda.hi, r.ci_mu.lo, r.ci_mu.hi, int(r.covered_lambda),
                  int(r.covered_mu), int(r.degenerate));
    csv += buf;
  }
  write_text_file(cfg.out_path + ".csv", csv);

  json summary;
  summary["schema"] = "bdem/compare-fm-summary/v1";
  summary["config"] = config_echo(cfg);
  summary["true_lambda"] = cfg.sim_lambda;
  summary["true_mu"] = cfg.sim_mu;
  summary["cells"] = json::array();
  for (const auto& c : result.summary) {
    summary["cells"].push_back({{"dt", c.dt},
                                {"method", c.method},
                                {"coverage_lambda", c.coverage_lambda},
                                {"coverage_mu", c.coverage_mu},
                                {"median_lambda", c.median_lambda},
                                {"median_mu", c.median_mu}});
  }
  write_text_file(cfg.out_path + ".json", summary.dump(2) + "\n");
  return kOk;
}

int run_diagnose_lowcount(const RunConfig& cfg) {
  require_seed(cfg);
  PanelData panel;
  try {
    panel = read_panel_csv_file(cfg.in_path);
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }
  study::DiagnoseConfig dcfg;
  dcfg.replicates = cfg.diag_replicates;
  dcfg.threshold = cfg.threshold;
  dcfg.lambda = cfg.diag_lambda;
  dcfg.mu = cfg.diag_mu;
  const study::DiagnoseResult result = study::run_diagnose_lowcount(panel, dcfg, cfg.seed);

  std::string csv = "replicate,n_low,n_high,t_low,t_high\n";
  char buf[160];
  for (std::size_t k = 0; k < result.simulated.size(); ++k) {
    const auto& s = result.simulated[k];
    std::snprintf(buf, sizeof buf, "%zu,%lld,%lld,%.17g,%.17g\n", k,
                  (long long)s.n_low, (long long)s.n_high, s.t_low, s.t_high);
    csv += buf;
  }
  write_text_file(cfg.out_path + ".csv", csv);

  json j;
  j["schema"] = "bdem/diagnose-lowcount/v1";
  j["config"] = config_echo(cfg);
  j["threshold"] = cfg.threshold;
  j["observed"] = {{"n_low", result.observed.n_low},
                   {"n_high", result.observed.n_high},
                   {"t_low", result.observed.t_low},
                   {"t_high", result.observed.t_high}};
  j["quantile_rank"] = {{"n_low", result.rank_n_low},
                        {"n_high", result.rank_n_high},
                        {"t_low", result.rank_t_low},
                        {"t_high", result.rank_t_high}};
  write_text_file(cfg.out_path + ".json", j.dump(2) + "\n");
  return kOk;
}

int dispatch(const RunConfig& cfg) {
  try {
    if (cfg.command == "fit") return run_fit(cfg);
    if (cfg.command == "simulate") return run_simulate(cfg);
    if (cfg.command == "compare-fm") return run_compare_fm(cfg);
    if (cfg.command == "diagnose-lowcount") return run_diagnose_lowcount(cfg);
    std::cerr << "error: unknown command '" << cfg.command << "'\n";
    return kValidationError;
  } catch (const invalid_panel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  }
}

}  // namespace bdi::cli
