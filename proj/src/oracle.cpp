#include "bdi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "bdi/quadrature.hpp"
#include "bdi/sampler.hpp"
#include "bdi/stats_util.hpp"

namespace bdi::oracle {

namespace {

// Poisson-weighted series sum_n pois(n; q t) * v P^n, P = I + A/q, for a
// tridiagonal A.  Weights are formed in log space so large q t cannot
// underflow the small-n terms' common factor.
std::vector<double> unif_series(const std::vector<double>& lower,  // A[k][k-1]
                                const std::vector<double>& diag,
                                const std::vector<double>& upper,  // A[k][k+1]
                                std::int64_t start, double t, double tail_bound) {
  const std::size_t n = diag.size();
  double q = 0.0;
  for (double d : diag) q = std::max(q, -d);
  q += 1e-9;
  const double qt = q * t;

  std::vector<double> v(n, 0.0), next(n, 0.0), acc(n, 0.0);
  v[std::size_t(start)] = 1.0;

  const std::int64_t n_hi =
      std::int64_t(qt + 12.0 * std::sqrt(qt + 1.0) + 40.0);
  double weight_sum = 0.0;
  for (std::int64_t m = 0; m <= n_hi; ++m) {
    const double logw = -qt + double(m) * std::log(qt > 0.0 ? qt : 1.0) - std::lgamma(double(m) + 1.0);
    const double w = qt > 0.0 ? std::exp(logw) : (m == 0 ? 1.0 : 0.0);
    if (w > 0.0) {
      for (std::size_t k = 0; k < n; ++k) acc[k] += w * v[k];
      weight_sum += w;
    }
    if (weight_sum >= 1.0 - tail_bound * 0.5 && m > std::int64_t(qt)) break;
    // v <- v (I + A/q)
    for (std::size_t k = 0; k < n; ++k) {
      double y = v[k] * (1.0 + diag[k] / q);
      if (k > 0) y += v[k - 1] * upper[k - 1] / q;
      if (k + 1 < n) y += v[k + 1] * lower[k + 1] / q;
      next[k] = y;
    }
    v.swap(next);
  }
  return acc;
}

struct Rates {
  std::vector<double> up, down, diag;
};

Rates generator_rates(const BDIParams& params, int max_state) {
  Rates r;
  const std::size_t n = std::size_t(max_state) + 1;
  r.up.assign(n, 0.0);
  r.down.assign(n, 0.0);
  r.diag.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = double(k);
    r.up[k] = k + 1 < n ? kk * params.lambda + params.nu : 0.0;
    r.down[k] = kk * params.mu;
    r.diag[k] = -(r.up[k] + r.down[k]);
  }
  return r;
}

void check_leakage(const std::vector<double>& row, double tail_bound) {
  double top = 0.0;
  const std::size_t n = row.size();
  const std::size_t guard_lo = n > 10 ? n - 10 : 0;
  for (std::size_t k = guard_lo; k < n; ++k) top += row[k];
  if (top > tail_bound)
    throw truncation_too_small("uniformization: probability mass near truncation boundary");
}

}  // namespace

std::vector<double> uniformization_row(std::int64_t i, double t, const BDIParams& params,
                                       const TruncationSpec& trunc) {
  validate_params(params);
  if (i < 0 || i > trunc.max_state) throw error("uniformization_row: state outside truncation");
  if (!(t >= 0.0)) throw error("uniformization_row: t must be nonnegative");
  const Rates r = generator_rates(params, trunc.max_state);
  auto row = unif_series(r.down, r.diag, r.up, i, t, trunc.tail_mass_bound);
  check_leakage(row, trunc.tail_mass_bound);
  return row;
}

std::vector<double> uniformization_col(std::int64_t j, double t, const BDIParams& params,
                                       const TruncationSpec& trunc) {
  validate_params(params);
  if (j < 0 || j > trunc.max_state) throw error("uniformization_col: state outside truncation");
  const Rates r = generator_rates(params, trunc.max_state);
  // Transpose: (Q^T)[k][k+1] = Q[k+1][k] = down-rate of k+1, and
  //            (Q^T)[k][k-1] = Q[k-1][k] = up-rate of k-1.
  const std::size_t n = r.diag.size();
  std::vector<double> up_t(n, 0.0), down_t(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (k + 1 < n) up_t[k] = r.down[k + 1];
    if (k > 0) down_t[k] = r.up[k - 1];
  }
  auto col = unif_series(down_t, r.diag, up_t, j, t, trunc.tail_mass_bound);
  check_leakage(col, trunc.tail_mass_bound);
  return col;
}

double uniformization_transition(std::int64_t i, std::int64_t j, double t,
                                 const BDIParams& params, const TruncationSpec& trunc) {
  if (j < 0) return 0.0;
  const auto row = uniformization_row(i, t, params, trunc);
  return j <= trunc.max_state ? row[std::size_t(j)] : 0.0;
}

RestrictedMoments convolution_restricted_moments(std::int64_t i, std::int64_t j, double t,
                                                 const BDIParams& params,
                                                 const TruncationSpec& trunc,
                                                 double quad_tol) {
  validate_params(params);
  if (!(t > 0.0)) throw error("convolution_restricted_moments: t must be positive");
  if (j < 0 || j > trunc.max_state || i > trunc.max_state)
    throw error("convolution_restricted_moments: state outside truncation");

  // Memoize the forward row at tau and backward column at t - tau; the three
  // integrands share evaluation points under adaptive Simpson.
  std::unordered_map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> memo;
  auto tables_at = [&](double tau) -> const auto& {
    const std::int64_t key = std::int64_t(std::llround(tau * 4.503599627370496e15 / std::max(t, 1.0)));
    auto it = memo.find(key);
    if (it == memo.end()) {
      auto row = uniformization_row(i, tau, params, trunc);
      auto col = uniformization_col(j, t - tau, params, trunc);
      it = memo.emplace(key, std::make_pair(std::move(row), std::move(col))).first;
    }
    return it->second;
  };

  const std::size_t n = std::size_t(trunc.max_state) + 1;
  auto up_integrand = [&](double tau) {
    const auto& [row, col] = tables_at(tau);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k)
      s += row[k] * (double(k) * params.lambda + params.nu) * col[k + 1];
    return s;
  };
  auto down_integrand = [&](double tau) {
    const auto& [row, col] = tables_at(tau);
    double s = 0.0;
    for (std::size_t k = 1; k < n; ++k) s += row[k] * (double(k) * params.mu) * col[k - 1];
    return s;
  };
  auto pt_integrand = [&](double tau) {
    const auto& [row, col] = tables_at(tau);
    double s = 0.0;
    for (std::size_t k = 1; k < n; ++k) s += row[k] * double(k) * col[k];
    return s;
  };

  RestrictedMoments m;
  m.up = adaptive_simpson(up_integrand, 0.0, t, quad_tol);
  m.down = adaptive_simpson(down_integrand, 0.0, t, quad_tol);
  m.particle_time = adaptive_simpson(pt_integrand, 0.0, t, quad_tol);
  return m;
}

McConditionalStats mc_conditional_stats(std::int64_t i, std::int64_t j, double t,
                                        const BDIParams& params, std::int64_t n_accepted,
                                        RngStream rng, std::int64_t max_attempts) {
  validate_params(params);
  if (n_accepted < 2) throw error("mc_conditional_stats: need n_accepted >= 2");
  if (max_attempts < 0) max_attempts = n_accepted * 100000;

  std::vector<double> up, down, pt;
  up.reserve(std::size_t(n_accepted));
  down.reserve(std::size_t(n_accepted));
  pt.reserve(std::size_t(n_accepted));

  std::int64_t attempts = 0;
  std::int64_t path_id = 0;
  while (std::int64_t(up.size()) < n_accepted) {
    if (attempts >= max_attempts)
      throw max_tries_exceeded("mc_conditional_stats: attempt budget exhausted");
    RngStream path_rng = rng.child(std::uint64_t(path_id++));
    ++attempts;
    const Trajectory traj = simulate_forward(i, t, params, path_rng);
    if (traj.final_state() != j) continue;
    const SufficientStats s = sufficient_stats(traj);
    up.push_back(double(s.n_plus));
    down.push_back(double(s.n_minus));
    pt.push_back(s.particle_time);
  }

  auto summarize = [](const std::vector<double>& v) {
    const MeanVar mv = mean_var(v);
    return McMoment{mv.mean, mv.se()};
  };
  auto product = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] * b[k];
    return r;
  };

  McConditionalStats out;
  out.up = summarize(up);
  out.down = summarize(down);
  out.particle_time = summarize(pt);
  out.up_sq = summarize(product(up, up));
  out.down_sq = summarize(product(down, down));
  out.particle_time_sq = summarize(product(pt, pt));
  out.up_down = summarize(product(up, down));
  out.up_pt = summarize(product(up, pt));
  out.down_pt = summarize(product(down, pt));
  out.accepted = std::int64_t(up.size());
  out.attempts = attempts;
  return out;
}

}  // namespace bdi::oracle
