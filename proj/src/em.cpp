#include "bdi/em.hpp"

#include <algorithm>
#include <cmath>

#include "bdi/genfun.hpp"

namespace bdi {

namespace {

constexpr double kBoundaryTol = 1e-12;

double rel_change(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace

RestrictedMStep mstep_restricted(const PanelExpectedStats& stats, double beta, double T_total) {
  if (beta < 0.0) throw error("mstep_restricted: beta must be nonnegative");
  if (stats.P_total <= 0.0) {
    if (stats.U_total > 0.0 || stats.D_total > 0.0)
      throw degenerate_estep("mstep_restricted: zero expected particle-time with expected jumps");
    return {0.0, 0.0};
  }
  RestrictedMStep m;
  m.mu = stats.D_total / stats.P_total;
  m.lambda = stats.U_total / (stats.P_total + beta * T_total);
  return m;
}

DeathImmMStep mstep_death_imm(const PanelExpectedStats& stats, double T_total) {
  if (!(T_total > 0.0)) throw error("mstep_death_imm: total time must be positive");
  if (stats.P_total <= 0.0 && stats.D_total > 0.0)
    throw degenerate_estep("mstep_death_imm: zero expected particle-time with expected deaths");
  DeathImmMStep m;
  m.mu = stats.P_total > 0.0 ? stats.D_total / stats.P_total : 0.0;
  m.nu = stats.U_total / T_total;
  return m;
}

FitResult fit_em(const std::vector<Interval>& intervals, double total_time, Variant variant,
                 const EMOptions& opts) {
  if (variant != Variant::RestrictedImmigration && variant != Variant::DeathImmigration)
    throw error("fit_em supports the restricted-immigration and death-immigration models");
  if (opts.max_iter < 1 || !(opts.param_tol > 0.0) || !(opts.loglik_tol > 0.0))
    throw error("fit_em: invalid options");
  BDIParams theta = validate_params(opts.init);
  if (theta.variant != variant) throw error("fit_em: init variant mismatch");

  FitResult result;
  bool converged = false;
  int iter = 0;
  double prev_ll = -inf;

  for (; iter < opts.max_iter; ++iter) {
    const PanelExpectedStats stats = panel_expected_stats(intervals, theta);
    result.loglik_trace.push_back(stats.loglik);

    BDIParams next = theta;
    if (variant == Variant::RestrictedImmigration) {
      const RestrictedMStep m = mstep_restricted(stats, theta.beta, total_time);
      next = BDIParams::restricted(m.lambda, m.mu, theta.beta);
    } else {
      const DeathImmMStep m = mstep_death_imm(stats, total_time);
      next = BDIParams::death_immigration(m.mu, m.nu);
    }

    double pchange;
    if (variant == Variant::RestrictedImmigration)
      pchange = std::max(rel_change(next.lambda, theta.lambda), rel_change(next.mu, theta.mu));
    else
      pchange = std::max(rel_change(next.mu, theta.mu), rel_change(next.nu, theta.nu));
    const double llchange = std::abs(stats.loglik - prev_ll);
    prev_ll = stats.loglik;
    theta = next;

    if (iter > 0 && pchange < opts.param_tol && llchange < opts.loglik_tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  result.params_hat = theta;
  result.converged = converged;
  result.iterations = iter;
  result.loglik_trace.push_back(loglik_observed(intervals, theta));

  const bool interior = variant == Variant::RestrictedImmigration
                            ? (theta.lambda > kBoundaryTol && theta.mu > kBoundaryTol)
                            : (theta.mu > kBoundaryTol && theta.nu > kBoundaryTol);
  result.boundary = !interior;
  if (opts.compute_info && interior) {
    result.info = variant == Variant::RestrictedImmigration
                      ? louis_information_restricted(intervals, theta)
                      : louis_information_death_imm(intervals, theta);
    const std::vector<double> est = variant == Variant::RestrictedImmigration
                                        ? std::vector<double>{theta.lambda, theta.mu}
                                        : std::vector<double>{theta.mu, theta.nu};
    result.ci = wald_ci(est, result.info, opts.ci_level, opts.log_scale_ci);
  }
  return result;
}

FitResult fit_em(const PanelData& panel, Variant variant, const EMOptions& opts) {
  return fit_em(intervals_from_panel(panel), panel.total_time(), variant, opts);
}

}  // namespace bdi
