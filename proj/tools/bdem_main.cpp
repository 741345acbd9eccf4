#include <CLI11.hpp>

#include "bdi/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bdem: EM estimation for discretely observed linear "
               "birth-death-immigration processes"};
  app.require_subcommand(1);

  bdi::cli::RunConfig cfg;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "RNG seed (required for stochastic commands)")
        ->envname("BDEM_SEED")
        ->each([&](const std::string&) { cfg.seed_set = true; });
  };
  auto add_ci = [&](CLI::App* sub) {
    sub->add_option("--ci-level", cfg.ci_level, "confidence level")->envname("BDEM_CI_LEVEL");
    sub->add_flag("--log-scale-ci", cfg.log_scale_ci, "Wald intervals on the log-rate scale");
  };

  // ------------------------------------------------------------------- fit
  auto* fit = app.add_subcommand("fit", "fit a BDI model to a panel CSV");
  fit->add_option("--model", cfg.model, "restricted | death-immigration | full")
      ->envname("BDEM_MODEL");
  fit->add_option("--beta", cfg.beta, "immigration/birth ratio (restricted model)")
      ->envname("BDEM_BETA");
  fit->add_option("--init", cfg.init,
                  "initial parameters: restricted lambda,mu; death-immigration mu,nu; "
                  "full lambda,mu,nu")
      ->delimiter(',')
      ->required();
  fit->add_option("--max-iter", cfg.max_iter, "iteration cap")->envname("BDEM_MAX_ITER");
  fit->add_option("--tol", cfg.param_tol, "relative parameter tolerance")->envname("BDEM_TOL");
  fit->add_option("--loglik-tol", cfg.loglik_tol, "absolute log-likelihood tolerance");
  fit->add_option("--mc-initial", cfg.mc_initial, "initial Monte Carlo paths per interval");
  fit->add_option("--mc-max-paths", cfg.mc_max_paths, "Monte Carlo path cap per interval");
  fit->add_option("--telemetry", cfg.telemetry_path, "MC-EM iteration telemetry (JSON lines)");
  fit->add_option("--in", cfg.in_path, "panel CSV")->required();
  fit->add_option("--out", cfg.out_path, "result JSON")->required();
  add_seed(fit);
  add_ci(fit);

  // -------------------------------------------------------------- simulate
  auto* sim = app.add_subcommand("simulate", "simulate a panel CSV");
  sim->add_option("--protocol", cfg.protocol, "random-times | grid | surveillance");
  sim->add_option("--lambda", cfg.sim_lambda, "birth rate");
  sim->add_option("--mu", cfg.sim_mu, "death rate");
  sim->add_option("--nu", cfg.sim_nu, "immigration rate");
  sim->add_option("--individuals", cfg.individuals, "number of individuals");
  sim->add_option("--horizon", cfg.horizon, "observation horizon");
  sim->add_option("--dt", cfg.dt, "grid spacing (grid protocol)");
  sim->add_option("--init-low", cfg.init_low, "smallest initial state");
  sim->add_option("--init-high", cfg.init_high, "largest initial state");
  sim->add_option("--mean-extra-obs", cfg.mean_extra_obs,
                  "mean extra observations per individual (random-times)");
  sim->add_option("--mean-gap", cfg.mean_gap, "mean follow-up gap (surveillance)");
  sim->add_option("--out", cfg.out_path, "panel CSV path")->required();
  add_seed(sim);

  // ------------------------------------------------------------ compare-fm
  auto* cmp = app.add_subcommand("compare-fm",
                                 "replicate study: exact EM vs frequent-monitoring");
  cmp->add_option("--replicates", cfg.replicates, "replicates per dt");
  cmp->add_option("--dt-list", cfg.dts, "grid spacings")->delimiter(',');
  cmp->add_option("--lambda", cfg.sim_lambda, "true birth rate");
  cmp->add_option("--mu", cfg.sim_mu, "true death rate");
  cmp->add_option("--individuals", cfg.individuals, "individuals per replicate");
  cmp->add_option("--horizon", cfg.horizon, "grid horizon");
  cmp->add_option("--init-low", cfg.init_low, "smallest initial state");
  cmp->add_option("--init-high", cfg.init_high, "largest initial state");
  cmp->add_option("--max-iter", cfg.max_iter, "EM iteration cap");
  cmp->add_option("--out", cfg.out_path, "output prefix (.csv and .json)")->required();
  add_seed(cmp);
  add_ci(cmp);

  // ----------------------------------------------------- diagnose-lowcount
  auto* diag = app.add_subcommand(
      "diagnose-lowcount", "simulate no-change interval statistics under fitted rates");
  diag->add_option("--replicates", cfg.diag_replicates, "simulation replicates");
  diag->add_option("--threshold", cfg.threshold, "low/high count threshold");
  diag->add_option("--lambda", cfg.diag_lambda, "fitted birth rate")->required();
  diag->add_option("--mu", cfg.diag_mu, "fitted death rate")->required();
  diag->add_option("--in", cfg.in_path, "panel CSV")->required();
  diag->add_option("--out", cfg.out_path, "output prefix (.csv and .json)")->required();
  add_seed(diag);

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) cfg.command = "fit";
  if (sim->parsed()) cfg.command = "simulate";
  if (cmp->parsed()) cfg.command = "compare-fm";
  if (diag->parsed()) cfg.command = "diagnose-lowcount";

  return bdi::cli::dispatch(cfg);
}
