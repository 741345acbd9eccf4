#include <doctest.h>

#include <cmath>

#include "bdi/em.hpp"
#include "bdi/genfun.hpp"
#include "bdi/simstudy.hpp"
#include "test_util.hpp"

using namespace bdi;

namespace {

PanelData small_panel(std::uint64_t seed, int individuals = 20) {
  study::RandomTimesProtocol proto;
  proto.individuals = individuals;
  return study::simulate_random_times(BDIParams::restricted(0.07, 0.12, 1.2), proto,
                                      RngStream(seed));
}

}  // namespace

TEST_SUITE("em") {

TEST_CASE("restricted M-step closed form") {
  PanelExpectedStats s;
  s.U_total = 7.0;
  s.D_total = 6.0;
  s.P_total = 50.0;
  const RestrictedMStep m = mstep_restricted(s, 1.2, 10.0);
  CHECK(m.lambda == doctest::Approx(7.0 / 62.0).epsilon(1e-15));
  CHECK(m.mu == doctest::Approx(0.12).epsilon(1e-15));

  PanelExpectedStats zero;
  zero.P_total = 50.0;
  const RestrictedMStep z = mstep_restricted(zero, 1.2, 10.0);
  CHECK(z.lambda == 0.0);
  CHECK(z.mu == 0.0);

  PanelExpectedStats degen;
  degen.U_total = 1.0;
  CHECK_THROWS_AS(mstep_restricted(degen, 1.2, 10.0), degenerate_estep);
}

TEST_CASE("death-immigration M-step closed form") {
  PanelExpectedStats s;
  s.U_total = 5.0;
  s.D_total = 6.0;
  s.P_total = 50.0;
  const DeathImmMStep m = mstep_death_imm(s, 25.0);
  CHECK(m.mu == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(m.nu == doctest::Approx(0.2).epsilon(1e-15));

  PanelExpectedStats noup;
  noup.P_total = 50.0;
  CHECK(mstep_death_imm(noup, 25.0).nu == 0.0);
}

TEST_CASE("exact EM: monotone ascent, convergence, fixed point, M-step optimality") {
  const PanelData panel = small_panel(101);
  EMOptions opts;
  opts.init = BDIParams::restricted(0.2, 0.2, 1.2);
  // The fixed-point check below asserts agreement at 1e-8, so the fit itself
  // must be pushed well past the default tolerances first.
  opts.param_tol = 1e-11;
  opts.loglik_tol = 1e-13;
  opts.max_iter = 3000;
  const FitResult fit = fit_em(panel, Variant::RestrictedImmigration, opts);
  CHECK(fit.converged);
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
    CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-9);

  // Fixed point: one more E/M cycle stays put.
  const auto iv = intervals_from_panel(panel);
  const auto stats = panel_expected_stats(iv, fit.params_hat);
  const RestrictedMStep m = mstep_restricted(stats, 1.2, panel.total_time());
  CHECK(m.lambda == doctest::Approx(fit.params_hat.lambda).epsilon(1e-8));
  CHECK(m.mu == doctest::Approx(fit.params_hat.mu).epsilon(1e-8));

  // M-step optimality: gradient of the expected complete-data log-likelihood
  // vanishes at the update.
  const double glam = -stats.P_total - 1.2 * panel.total_time() + stats.U_total / m.lambda;
  const double gmu = -stats.P_total + stats.D_total / m.mu;
  CHECK(std::abs(glam) < 1e-8 * std::max(1.0, stats.P_total));
  CHECK(std::abs(gmu) < 1e-8 * std::max(1.0, stats.P_total));
}

TEST_CASE("exact EM agrees with a direct simplex maximization") {
  const PanelData panel = small_panel(77, 15);
  const auto iv = intervals_from_panel(panel);
  EMOptions opts;
  opts.init = BDIParams::restricted(0.2, 0.2, 1.2);
  opts.compute_info = false;
  const FitResult fit = fit_em(panel, Variant::RestrictedImmigration, opts);

  const auto direct = testutil::nelder_mead_max(
      [&](const std::vector<double>& x) {
        if (x[0] <= 0.0 || x[1] <= 0.0) return -1e30;
        return loglik_observed(iv, BDIParams::restricted(x[0], x[1], 1.2));
      },
      {0.1, 0.1}, 0.05);
  CHECK(fit.params_hat.lambda == doctest::Approx(direct[0]).epsilon(1e-4));
  CHECK(fit.params_hat.mu == doctest::Approx(direct[1]).epsilon(1e-4));
}

TEST_CASE("starting values do not change the optimum") {
  const PanelData panel = small_panel(202, 15);
  std::vector<std::pair<double, double>> inits{{0.05, 0.05}, {0.2, 0.2}, {1.0, 1.0}};
  std::vector<double> lams, mus;
  for (const auto& [l0, m0] : inits) {
    EMOptions opts;
    opts.init = BDIParams::restricted(l0, m0, 1.2);
    opts.compute_info = false;
    opts.param_tol = 1e-9;
    opts.loglik_tol = 1e-12;
    opts.max_iter = 3000;
    const FitResult fit = fit_em(panel, Variant::RestrictedImmigration, opts);
    lams.push_back(fit.params_hat.lambda);
    mus.push_back(fit.params_hat.mu);
  }
  for (std::size_t k = 1; k < lams.size(); ++k) {
    CHECK(std::abs(lams[k] - lams[0]) / lams[0] < 1e-5);
    CHECK(std::abs(mus[k] - mus[0]) / mus[0] < 1e-5);
  }
}

TEST_CASE("death-immigration EM recovers simulated rates") {
  study::RandomTimesProtocol proto;
  proto.individuals = 40;
  proto.horizon = 20.0;
  const PanelData panel = study::simulate_random_times(
      BDIParams::death_immigration(0.12, 0.2), proto, RngStream(404));
  EMOptions opts;
  opts.init = BDIParams::death_immigration(0.3, 0.3);
  const FitResult fit = fit_em(panel, Variant::DeathImmigration, opts);
  CHECK(fit.converged);
  REQUIRE(fit.ci.size() == 2);
  CHECK(fit.ci[0].contains(0.12));
  CHECK(fit.ci[1].contains(0.2));
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
    CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-9);
}

TEST_CASE("death-never-observed data drives mu to the boundary") {
  // Pure-birth data: strictly increasing counts.
  PanelData panel;
  panel.individuals.push_back({"a", {0.0, 1.0, 2.0, 3.0}, {1, 1, 2, 3}});
  panel.individuals.push_back({"b", {0.0, 2.0, 4.0}, {2, 3, 5}});
  EMOptions opts;
  opts.init = BDIParams::restricted(0.2, 0.2, 0.5);
  opts.compute_info = false;
  opts.max_iter = 200;
  const FitResult fit = fit_em(panel, Variant::RestrictedImmigration, opts);
  CHECK(fit.params_hat.mu < 1e-4);
  CHECK(fit.boundary);
}

}  // TEST_SUITE
