#include "bdi/simstudy.hpp"

#include <algorithm>
#include <cmath>

#include "bdi/fm.hpp"
#include "bdi/sampler.hpp"
#include "bdi/stats_util.hpp"

namespace bdi::study {

namespace {

std::string padded_id(int k, int width = 4) {
  std::string s = std::to_string(k);
  while (int(s.size()) < width) s.insert(s.begin(), '0');
  return "ind" + s;
}

ObservationSeries observe_path(const std::string& id, const BDIParams& params,
                               std::int64_t x0, const std::vector<double>& times,
                               RngStream& rng) {
  ObservationSeries s;
  s.id = id;
  s.times = times;
  const double span = times.back() - times.front();
  const Trajectory traj = simulate_forward(x0, span, params, rng);
  s.counts.reserve(times.size());
  for (double t : times) s.counts.push_back(traj.state_at(t - times.front()));
  return s;
}

}  // namespace

PanelData simulate_random_times(const BDIParams& params, const RandomTimesProtocol& proto,
                                RngStream rng) {
  validate_params(params);
  if (proto.individuals < 1 || !(proto.horizon > 0.0))
    throw error("simulate_random_times: bad protocol");
  PanelData panel;
  for (int k = 0; k < proto.individuals; ++k) {
    RngStream ind = rng.child(std::uint64_t(k));
    const std::int64_t n_obs = 2 + ind.poisson(proto.mean_extra_obs);
    std::vector<double> times(static_cast<std::size_t>(n_obs));
    for (auto& t : times) t = ind.u01() * proto.horizon;
    std::sort(times.begin(), times.end());
    // Uniform draws collide with probability zero; nudge defensively anyway.
    for (std::size_t m = 1; m < times.size(); ++m)
      if (times[m] <= times[m - 1]) times[m] = times[m - 1] + 1e-9;
    const std::int64_t x0 = ind.uniform_int(proto.init_low, proto.init_high);
    panel.individuals.push_back(observe_path(padded_id(k), params, x0, times, ind));
  }
  validate_panel(panel);
  return panel;
}

PanelData simulate_grid(const BDIParams& params, const GridProtocol& proto, RngStream rng) {
  validate_params(params);
  if (proto.individuals < 1 || !(proto.dt > 0.0) || proto.horizon < proto.dt)
    throw error("simulate_grid: bad protocol");
  PanelData panel;
  std::vector<double> times;
  for (double t = 0.0; t <= proto.horizon + 1e-12; t += proto.dt) times.push_back(t);
  for (int k = 0; k < proto.individuals; ++k) {
    RngStream ind = rng.child(std::uint64_t(k));
    const std::int64_t x0 = ind.uniform_int(proto.init_low, proto.init_high);
    panel.individuals.push_back(observe_path(padded_id(k), params, x0, times, ind));
  }
  validate_panel(panel);
  return panel;
}

PanelData simulate_surveillance(const BDIParams& params, const SurveillanceProtocol& proto,
                                RngStream rng) {
  validate_params(params);
  if (proto.individuals < 1 || !(proto.mean_gap > 0.0))
    throw error("simulate_surveillance: bad protocol");
  PanelData panel;
  for (int k = 0; k < proto.individuals; ++k) {
    RngStream ind = rng.child(std::uint64_t(k));
    int extra = 1;
    const double u = ind.u01();
    if (u < 0.05)
      extra = 3;
    else if (u < 0.25)
      extra = 2;
    std::vector<double> times{0.0};
    for (int m = 0; m < extra; ++m)
      times.push_back(times.back() + ind.exponential(1.0 / proto.mean_gap));
    const double raw = proto.init_mean + proto.init_sd * ind.normal();
    const std::int64_t x0 = std::clamp(std::int64_t(std::llround(raw)), proto.init_low,
                                       proto.init_high);
    panel.individuals.push_back(observe_path(padded_id(k), params, x0, times, ind));
  }
  validate_panel(panel);
  return panel;
}

CompareFmResult run_compare_fm(const CompareFmConfig& cfg, std::uint64_t seed) {
  if (cfg.replicates < 2) throw error("run_compare_fm: need >= 2 replicates");
  CompareFmResult result;
  const std::size_t cells = cfg.dts.size() * std::size_t(cfg.replicates);
  std::vector<CompareFmRow> em_rows(cells), fm_rows(cells);

  RngStream root(seed);
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t d = cell / std::size_t(cfg.replicates);
    const int rep = int(cell % std::size_t(cfg.replicates));
    GridProtocol proto = cfg.grid;
    proto.dt = cfg.dts[d];
    RngStream rng = root.child(d, std::uint64_t(rep));
    const BDIParams truth = BDIParams::restricted(cfg.true_lambda, cfg.true_mu, 0.0);
    const PanelData panel = simulate_grid(truth, proto, rng);
    const auto intervals = intervals_from_panel(panel);

    CompareFmRow em_row;
    em_row.dt = proto.dt;
    em_row.replicate = rep;
    em_row.method = "em";
    try {
      EMOptions opts;
      opts.init = BDIParams::restricted(cfg.em_init_lambda, cfg.em_init_mu, 0.0);
      opts.max_iter = cfg.em_max_iter;
      opts.param_tol = cfg.em_param_tol;
      opts.loglik_tol = cfg.em_loglik_tol;
      opts.ci_level = cfg.ci_level;
      const FitResult fit =
          fit_em(intervals, panel.total_time(), Variant::RestrictedImmigration, opts);
      em_row.lambda_hat = fit.params_hat.lambda;
      em_row.mu_hat = fit.params_hat.mu;
      if (!fit.boundary && fit.ci.size() == 2) {
        em_row.ci_lambda = fit.ci[0];
        em_row.ci_mu = fit.ci[1];
        em_row.covered_lambda = fit.ci[0].contains(cfg.true_lambda);
        em_row.covered_mu = fit.ci[1].contains(cfg.true_mu);
      } else {
        em_row.degenerate = true;
      }
    } catch (const bdi::error&) {
      em_row.degenerate = true;
    }
    em_rows[cell] = em_row;

    CompareFmRow fm_row;
    fm_row.dt = proto.dt;
    fm_row.replicate = rep;
    fm_row.method = "fm";
    try {
      const FMFit fit = fm_fit(intervals, cfg.ci_level);
      fm_row.lambda_hat = fit.lambda;
      fm_row.mu_hat = fit.mu;
      if (!fit.boundary && fit.ci.size() == 2) {
        fm_row.ci_lambda = fit.ci[0];
        fm_row.ci_mu = fit.ci[1];
        fm_row.covered_lambda = fit.ci[0].contains(cfg.true_lambda);
        fm_row.covered_mu = fit.ci[1].contains(cfg.true_mu);
      } else {
        fm_row.degenerate = true;
      }
    } catch (const bdi::error&) {
      fm_row.degenerate = true;
    }
    fm_rows[cell] = fm_row;
  });

  for (std::size_t c = 0; c < cells; ++c) {
    result.rows.push_back(em_rows[c]);
    result.rows.push_back(fm_rows[c]);
  }

  for (std::size_t d = 0; d < cfg.dts.size(); ++d) {
    for (const char* method : {"em", "fm"}) {
      CompareFmCell cell;
      cell.dt = cfg.dts[d];
      cell.method = method;
      std::vector<double> lams, mus;
      int cov_l = 0, cov_m = 0, n = 0;
      for (const auto& row : result.rows) {
        if (row.method != method || row.dt != cfg.dts[d]) continue;
        ++n;
        lams.push_back(row.lambda_hat);
        mus.push_back(row.mu_hat);
        cov_l += row.covered_lambda ? 1 : 0;
        cov_m += row.covered_mu ? 1 : 0;
      }
      cell.coverage_lambda = double(cov_l) / double(n);
      cell.coverage_mu = double(cov_m) / double(n);
      cell.median_lambda = median(lams);
      cell.median_mu = median(mus);
      result.summary.push_back(cell);
    }
  }
  return result;
}

DiagnoseStats diagnose_stats(const PanelData& panel, std::int64_t threshold) {
  DiagnoseStats s;
  for (const auto& ind : panel.individuals) {
    for (std::size_t k = 0; k + 1 < ind.times.size(); ++k) {
      if (ind.counts[k] != ind.counts[k + 1]) continue;
      const double len = ind.times[k + 1] - ind.times[k];
      if (ind.counts[k] < threshold) {
        ++s.n_low;
        s.t_low += len;
      } else {
        ++s.n_high;
        s.t_high += len;
      }
    }
  }
  return s;
}

DiagnoseResult run_diagnose_lowcount(const PanelData& panel, const DiagnoseConfig& cfg,
                                     std::uint64_t seed) {
  validate_panel(panel);
  if (cfg.replicates < 2) throw error("run_diagnose_lowcount: need >= 2 replicates");
  const BDIParams params = BDIParams::restricted(cfg.lambda, cfg.mu, 0.0);
  validate_params(params);

  DiagnoseResult result;
  result.observed = diagnose_stats(panel, cfg.threshold);
  result.simulated.resize(std::size_t(cfg.replicates));

  RngStream root(seed);
  parallel_for(std::size_t(cfg.replicates), [&](std::size_t rep) {
    RngStream rng = root.child(rep);
    PanelData sim;
    sim.individuals.reserve(panel.individuals.size());
    for (std::size_t k = 0; k < panel.individuals.size(); ++k) {
      const auto& ind = panel.individuals[k];
      RngStream ind_rng = rng.child(k);
      sim.individuals.push_back(
          observe_path(ind.id, params, ind.counts.front(), ind.times, ind_rng));
    }
    result.simulated[rep] = diagnose_stats(sim, cfg.threshold);
  });

  auto rank = [&](auto getter, auto observed) {
    double below = 0.0, equal = 0.0;
    for (const auto& s : result.simulated) {
      const auto v = getter(s);
      if (v < observed) below += 1.0;
      if (v == observed) equal += 1.0;
    }
    return (below + 0.5 * equal) / double(result.simulated.size());
  };
  result.rank_n_low = rank([](const DiagnoseStats& s) { return s.n_low; }, result.observed.n_low);
  result.rank_n_high =
      rank([](const DiagnoseStats& s) { return s.n_high; }, result.observed.n_high);
  result.rank_t_low = rank([](const DiagnoseStats& s) { return s.t_low; }, result.observed.t_low);
  result.rank_t_high =
      rank([](const DiagnoseStats& s) { return s.t_high; }, result.observed.t_high);
  return result;
}

}  // namespace bdi::study
