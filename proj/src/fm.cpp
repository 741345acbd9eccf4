#include "bdi/fm.hpp"

#include <algorithm>
#include <cmath>

namespace bdi {

FMData fm_data_from_intervals(const std::vector<Interval>& intervals, bool retain_zero_start) {
  FMData data;
  for (const auto& iv : intervals) {
    const std::int64_t d = iv.end_state - iv.start_state;
    if (iv.start_state == 0) {
      if (retain_zero_start && d == 0) {
        data.usable.push_back({0, 0, iv.length});
      } else {
        ++data.excluded_zero_start;
      }
      continue;
    }
    if (d < -1 || d > 1) {
      ++data.excluded_multistep;
      continue;
    }
    data.usable.push_back({iv.start_state, int(d), iv.length});
  }
  return data;
}

double fm_interval_loglik(std::int64_t i, int delta, double t, double lambda, double mu) {
  if (i == 0) {
    if (delta == 0) return 0.0;  // retained 0 -> 0 rows carry no information
    throw error("fm_interval_loglik: start state 0 with a change is undefined");
  }
  if (i < 0 || !(t > 0.0)) throw error("fm_interval_loglik: bad interval");
  const double lam_i = double(i) * (lambda + mu);
  switch (delta) {
    case 0:
      return -lam_i * t;
    case 1: {
      if (lambda <= 0.0) return -inf;
      const double p = lambda / (lambda + mu) * (-std::expm1(-lam_i * t));
      return p > 0.0 ? std::log(p) : -inf;
    }
    case -1: {
      if (mu <= 0.0) return -inf;
      const double p = mu / (lambda + mu) * (-std::expm1(-lam_i * t));
      return p > 0.0 ? std::log(p) : -inf;
    }
    default:
      throw error("fm_interval_loglik: |delta| must be <= 1");
  }
}

double fm_loglik(const FMData& data, double lambda, double mu) {
  double ll = 0.0;
  for (const auto& iv : data.usable)
    ll += fm_interval_loglik(iv.start_state, iv.delta, iv.length, lambda, mu);
  return ll;
}

namespace {

// Gradient of the FM log-likelihood.  With s = lambda + mu, q = lambda / s:
//   l = -s * sum_{d=0} i t + N+ log(lambda) + N- log(mu)
//       - (N+ + N-) log(s) + sum_{d!=0} log(1 - e^{-i s t}).
void fm_gradient(const FMData& data, double lambda, double mu, double& gl, double& gm) {
  gl = gm = 0.0;
  const double s = lambda + mu;
  for (const auto& iv : data.usable) {
    if (iv.start_state == 0) continue;
    const double it = double(iv.start_state) * iv.length;
    if (iv.delta == 0) {
      gl -= it;
      gm -= it;
    } else {
      const double e = std::exp(-it * s);
      const double common = -1.0 / s + it * e / (1.0 - e);
      gl += common;
      gm += common;
      if (iv.delta == 1)
        gl += 1.0 / lambda;
      else
        gm += 1.0 / mu;
    }
  }
}

}  // namespace

FMFit fm_fit(const std::vector<Interval>& intervals, double ci_level, bool retain_zero_start) {
  const FMData data = fm_data_from_intervals(intervals, retain_zero_start);
  FMFit fit;
  fit.excluded = data.excluded_multistep + data.excluded_zero_start;
  if (data.usable.empty())
    throw all_intervals_excluded("fm_fit: no usable intervals");

  std::int64_t n_up = 0, n_down = 0;
  bool any_event_possible = false;
  for (const auto& iv : data.usable) {
    if (iv.start_state > 0) any_event_possible = true;
    if (iv.delta == 1) ++n_up;
    if (iv.delta == -1) ++n_down;
  }
  if (!any_event_possible) throw all_intervals_excluded("fm_fit: only state-0 rows present");

  if (n_up + n_down == 0) {
    // No observed changes: the likelihood is maximized by zero rates.
    fit.lambda = fit.mu = 0.0;
    fit.boundary = true;
    return fit;
  }

  // The FM likelihood separates in (s, q) = (lambda + mu, lambda / s): q has
  // the closed form N+/(N+ + N-) and s solves a monotone 1-D equation.  Use
  // that as the starting point, then polish with safeguarded 2-D Newton on
  // the analytic gradient.
  const double q = double(n_up) / double(n_up + n_down);
  double s_lo = 1e-12, s_hi = 1.0;
  auto dl_ds = [&](double s) {
    double g = 0.0;
    for (const auto& iv : data.usable) {
      if (iv.start_state == 0) continue;
      const double it = double(iv.start_state) * iv.length;
      if (iv.delta == 0) {
        g -= it;
      } else {
        const double e = std::exp(-it * s);
        g += -1.0 / s + it * e / (1.0 - e);
      }
    }
    return g;
  };
  while (dl_ds(s_hi) > 0.0 && s_hi < 1e6) s_hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (dl_ds(mid) > 0.0)
      s_lo = mid;
    else
      s_hi = mid;
    if (s_hi - s_lo < 1e-14 * std::max(1.0, s_hi)) break;
  }
  double s = 0.5 * (s_lo + s_hi);
  double lambda = q * s, mu = (1.0 - q) * s;

  if (lambda > 0.0 && mu > 0.0) {
    // 2-D Newton polish with numeric Hessian of the analytic gradient.
    for (int it = 0; it < 50; ++it) {
      double gl, gm;
      fm_gradient(data, lambda, mu, gl, gm);
      const double h1 = 1e-7 * std::max(1.0, lambda), h2 = 1e-7 * std::max(1.0, mu);
      double glp, gmp, glq, gmq;
      fm_gradient(data, lambda + h1, mu, glp, gmp);
      fm_gradient(data, lambda, mu + h2, glq, gmq);
      const double h11 = (glp - gl) / h1, h12 = (glq - gl) / h2;
      const double h21 = (gmp - gm) / h1, h22 = (gmq - gm) / h2;
      const double det = h11 * h22 - h12 * h21;
      if (!(std::abs(det) > 1e-300)) break;
      double dl = (-gl * h22 + gm * h12) / det;
      double dm = (-gm * h11 + gl * h21) / det;
      double step = 1.0;
      while ((lambda + step * dl <= 0.0 || mu + step * dm <= 0.0) && step > 1e-8) step *= 0.5;
      lambda += step * dl;
      mu += step * dm;
      if (std::abs(step * dl) < 1e-12 * std::max(1.0, lambda) &&
          std::abs(step * dm) < 1e-12 * std::max(1.0, mu))
        break;
    }
  }
  fit.lambda = lambda;
  fit.mu = mu;
  fit.boundary = lambda <= 1e-12 || mu <= 1e-12;

  if (!fit.boundary) {
    // Observed FM information from the central-difference Hessian.
    const double h1 = 1e-5 * std::max(1.0, lambda), h2 = 1e-5 * std::max(1.0, mu);
    auto ll = [&](double l, double m) { return fm_loglik(data, l, m); };
    const double f0 = ll(lambda, mu);
    const double dll = (ll(lambda + h1, mu) - 2.0 * f0 + ll(lambda - h1, mu)) / (h1 * h1);
    const double dmm = (ll(lambda, mu + h2) - 2.0 * f0 + ll(lambda, mu - h2)) / (h2 * h2);
    const double dlm = (ll(lambda + h1, mu + h2) - ll(lambda + h1, mu - h2) -
                        ll(lambda - h1, mu + h2) + ll(lambda - h1, mu - h2)) /
                       (4.0 * h1 * h2);
    fit.info.param_names = {"lambda", "mu"};
    fit.info.entries = {{-dll, -dlm}, {-dlm, -dmm}};
    fit.ci = wald_ci({lambda, mu}, fit.info, ci_level, false);
  }
  return fit;
}

FMFit fm_fit(const PanelData& panel, double ci_level, bool retain_zero_start) {
  return fm_fit(intervals_from_panel(panel), ci_level, retain_zero_start);
}

}  // namespace bdi
