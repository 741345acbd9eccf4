#include "bdi/mcem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bdi/genfun.hpp"
#include "bdi/stats_util.hpp"

namespace bdi {

namespace {

// Streaming first/second moments of the per-path statistic vector
// x = (n_{0,1}, ..., n_{S,S+1}, N-, R) for one interval.  Keeping the full
// outer-product matrix lets dQ = mean of a.x + c0 and its sample variance be
// evaluated for any linear functional after the M-step, without retaining
// paths.
class StatAccum {
 public:
  void add(const SufficientStats& s) {
    std::int64_t top = -1;
    for (const auto& [state, count] : s.upjumps_by_state)
      top = std::max(top, state);
    ensure_states(top + 1);
    const std::size_t d = dim();
    x_.assign(d, 0.0);
    for (const auto& [state, count] : s.upjumps_by_state)
      x_[std::size_t(state)] = double(count);
    x_[d - 2] = double(s.n_minus);
    x_[d - 1] = s.particle_time;
    for (std::size_t r = 0; r < d; ++r) {
      sum_[r] += x_[r];
      for (std::size_t c = r; c < d; ++c) outer_[r * d + c] += x_[r] * x_[c];
    }
    ++n_;
  }

  std::int64_t n() const { return n_; }
  std::size_t n_states() const { return states_; }
  double mean(std::size_t k) const { return sum_[k] / double(n_); }
  double mean_nminus() const { return mean(dim() - 2); }
  double mean_pt() const { return mean(dim() - 1); }

  // Sample mean and variance of a.x (a has dim() entries).
  void linear_stats(const std::vector<double>& a, double& mean_out, double& var_out) const {
    const std::size_t d = dim();
    double m = 0.0;
    for (std::size_t k = 0; k < d; ++k) m += a[k] * sum_[k];
    m /= double(n_);
    double e2 = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      e2 += a[r] * a[r] * outer_[r * d + r];
      for (std::size_t c = r + 1; c < d; ++c) e2 += 2.0 * a[r] * a[c] * outer_[r * d + c];
    }
    e2 /= double(n_);
    mean_out = m;
    var_out = n_ > 1 ? std::max(0.0, (e2 - m * m) * double(n_) / double(n_ - 1)) : 0.0;
  }

  double var(std::size_t k) const {
    const std::size_t d = dim();
    const double m = mean(k);
    const double e2 = outer_[k * d + k] / double(n_);
    return n_ > 1 ? std::max(0.0, (e2 - m * m) * double(n_) / double(n_ - 1)) : 0.0;
  }

 private:
  std::size_t dim() const { return states_ + 2; }

  void ensure_states(std::int64_t need) {
    if (need <= std::int64_t(states_)) return;
    const std::size_t old_d = dim();
    const std::size_t new_states = std::size_t(need);
    const std::size_t new_d = new_states + 2;
    std::vector<double> sum2(new_d, 0.0), outer2(new_d * new_d, 0.0);
    // old layout: [states..., nminus, pt] -> shift the tail
    for (std::size_t k = 0; k < states_; ++k) sum2[k] = sum_[k];
    sum2[new_d - 2] = old_d >= 2 ? sum_[old_d - 2] : 0.0;
    sum2[new_d - 1] = old_d >= 1 ? sum_[old_d - 1] : 0.0;
    auto remap = [&](std::size_t k) {
      if (k < states_) return k;
      return k == old_d - 2 ? new_d - 2 : new_d - 1;
    };
    for (std::size_t r = 0; r < old_d; ++r)
      for (std::size_t c = r; c < old_d; ++c) {
        std::size_t rr = remap(r), cc = remap(c);
        if (rr > cc) std::swap(rr, cc);
        outer2[rr * new_d + cc] = outer_[r * old_d + c];
      }
    states_ = new_states;
    sum_ = std::move(sum2);
    outer_ = std::move(outer2);
  }

  std::size_t states_ = 0;
  std::int64_t n_ = 0;
  std::vector<double> sum_;
  std::vector<double> outer_;
  std::vector<double> x_;
};

struct EStepInternal {
  MCExpectedStats stats;
  std::vector<StatAccum> accums;  // one per interval
};

EStepInternal estep_internal(const std::vector<Interval>& intervals, const BDIParams& params,
                             std::int64_t n_paths, RngStream rng,
                             const SamplerOptions& sopts) {
  if (n_paths < 2) throw error("estep_mc: need n_paths >= 2");
  EStepInternal out;
  out.accums.resize(intervals.size());
  std::vector<std::string> failures(intervals.size());

  parallel_for(intervals.size(), [&](std::size_t k) {
    try {
      const Interval& iv = intervals[k];
      ConditionedSampler sampler(iv.start_state, iv.end_state, iv.length, params, sopts);
      for (std::int64_t path = 0; path < n_paths; ++path) {
        RngStream prng = rng.child(k, std::uint64_t(path));
        const Trajectory traj = sampler.sample(prng);
        out.accums[k].add(sufficient_stats(traj));
      }
    } catch (const bdi::error& e) {
      failures[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < intervals.size(); ++k)
    if (!failures[k].empty())
      throw sampler_failure("interval #" + std::to_string(k) + ": " + failures[k]);

  MCExpectedStats& s = out.stats;
  s.n_paths_per_interval = n_paths;
  for (auto& acc : out.accums) {
    const std::size_t S = acc.n_states();
    for (std::size_t st = 0; st < S; ++st) {
      const double m = acc.mean(st);
      if (m > 0.0) {
        s.upjump_means_by_state[std::int64_t(st)] += m;
        s.upjump_se_by_state[std::int64_t(st)] += acc.var(st) / double(acc.n());
      }
      s.U_total += m;
    }
    s.D_total += acc.mean_nminus();
    s.P_total += acc.mean_pt();
    s.U_se += [&] {
      std::vector<double> ones(S + 2, 1.0);
      ones[S] = 0.0;
      ones[S + 1] = 0.0;
      double m, v;
      acc.linear_stats(ones, m, v);
      return v / double(acc.n());
    }();
    s.D_se += acc.var(S) / double(acc.n());
    s.P_se += acc.var(S + 1) / double(acc.n());
  }
  s.U_se = std::sqrt(s.U_se);
  s.D_se = std::sqrt(s.D_se);
  s.P_se = std::sqrt(s.P_se);
  for (auto& [st, v] : s.upjump_se_by_state) v = std::sqrt(v);
  return out;
}

// dQ = Q(theta_new) - Q(theta_old) under the current path sample, with its
// Monte Carlo standard error (independent intervals, common paths).
void delta_q(const std::vector<Interval>& intervals, const std::vector<StatAccum>& accums,
             const BDIParams& nw, const BDIParams& old, double& dq, double& se) {
  dq = 0.0;
  double var = 0.0;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const StatAccum& acc = accums[k];
    const std::size_t S = acc.n_states();
    std::vector<double> a(S + 2, 0.0);
    for (std::size_t st = 0; st < S; ++st) {
      const double rn = double(st) * nw.lambda + nw.nu;
      const double ro = double(st) * old.lambda + old.nu;
      // mean count is zero whenever the state never appeared, so a log of a
      // zero rate can only matter for states with mass; both are guarded by
      // the M-step's bracket.
      a[st] = (rn > 0.0 ? std::log(rn) : 0.0) - (ro > 0.0 ? std::log(ro) : 0.0);
    }
    a[S] = (nw.mu > 0.0 ? std::log(nw.mu) : 0.0) - (old.mu > 0.0 ? std::log(old.mu) : 0.0);
    a[S + 1] = -(nw.lambda + nw.mu) + (old.lambda + old.mu);
    const double c0 = -intervals[k].length * (nw.nu - old.nu);
    double m, v;
    acc.linear_stats(a, m, v);
    dq += m + c0;
    var += v / double(acc.n());
  }
  se = std::sqrt(var);
}

}  // namespace

MCExpectedStats estep_mc(const std::vector<Interval>& intervals, const BDIParams& params,
                         std::int64_t n_paths, RngStream rng) {
  validate_params(params);
  return estep_internal(intervals, params, n_paths, rng, SamplerOptions{}).stats;
}

MCExpectedStats estep_mc(const PanelData& panel, const BDIParams& params,
                         std::int64_t n_paths, RngStream rng) {
  return estep_mc(intervals_from_panel(panel), params, n_paths, rng);
}

FullMStep mstep_full(const MCExpectedStats& stats, double T_total) {
  if (!(T_total > 0.0)) throw error("mstep_full: total time must be positive");
  const double U = stats.U_total, D = stats.D_total, P = stats.P_total;
  if (P <= 0.0 && (U > 0.0 || D > 0.0))
    throw degenerate_estep("mstep_full: zero expected particle-time with expected jumps");

  FullMStep m;
  m.mu = P > 0.0 ? D / P : 0.0;
  if (U <= 0.0) {
    m.lambda = 0.0;
    m.nu = 0.0;
    m.boundary = true;
    return m;
  }

  // Profile nu(lambda) = (U - P*lambda)/T along the stationarity line; the
  // profiled objective g(lambda) = sum_i nbar_i log(i*lambda + nu(lambda)) - U
  // is strictly concave on [0, U/P].
  const double c = P / T_total;
  const double hi = U / P;
  auto nu_of = [&](double lam) { return std::max(0.0, (U - P * lam) / T_total); };
  auto gprime = [&](double lam) {
    const double nu = (U - P * lam) / T_total;
    double g = 0.0;
    for (const auto& [state, count] : stats.upjump_means_by_state) {
      const double rate = double(state) * lam + nu;
      if (rate <= 0.0) return -inf;
      g += count * (double(state) - c) / rate;
    }
    return g;
  };

  const double g0 = gprime(0.0);
  if (g0 <= 0.0) {
    m.lambda = 0.0;
    m.nu = nu_of(0.0);
    m.boundary = true;
    return m;
  }
  double ghi = gprime(hi);
  if (ghi >= 0.0) {
    m.lambda = hi;
    m.nu = 0.0;
    m.boundary = true;
    return m;
  }

  // Safeguarded Newton on g'(lambda) within [lo, hi]; g' is decreasing.
  double lo = 0.0, hicur = hi;
  double x = 0.5 * hi;
  for (int it = 0; it < 200; ++it) {
    const double g = gprime(x);
    if (std::abs(g) < 1e-12) break;
    if (g > 0.0)
      lo = x;
    else
      hicur = x;
    double gpp = 0.0;
    const double nu = (U - P * x) / T_total;
    for (const auto& [state, count] : stats.upjump_means_by_state) {
      const double rate = double(state) * x + nu;
      const double term = (double(state) - c) / rate;
      gpp -= count * term * term;
    }
    double next = gpp < 0.0 ? x - g / gpp : 0.5 * (lo + hicur);
    if (!(next > lo && next < hicur)) next = 0.5 * (lo + hicur);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  m.lambda = x;
  m.nu = nu_of(x);
  return m;
}

FitResult fit_mcem(const std::vector<Interval>& intervals, double total_time,
                   const MCEMOptions& opts, RngStream rng,
                   std::vector<McemIterDiag>* diagnostics) {
  if (!(opts.ascent_confidence > 0.0 && opts.ascent_confidence < 1.0))
    throw error("fit_mcem: ascent confidence must be in (0,1)");
  if (!(opts.growth > 1.0)) throw error("fit_mcem: growth factor must exceed 1");
  BDIParams theta = validate_params(opts.init);
  if (theta.variant != Variant::Full) throw error("fit_mcem: init must be a full-model parameter");

  const double z = norm_quantile(opts.ascent_confidence);
  std::int64_t m_paths = opts.n_initial;

  FitResult result;
  result.loglik_trace.push_back(loglik_observed(intervals, theta));

  auto emit_telemetry = [&](const McemIterDiag& d) {
    if (!opts.telemetry) return;
    (*opts.telemetry) << "{\"iteration\":" << d.iteration << ",\"n_paths\":" << d.n_paths
                      << ",\"lambda\":" << d.params.lambda << ",\"mu\":" << d.params.mu
                      << ",\"nu\":" << d.params.nu << ",\"delta_q\":" << d.delta_q
                      << ",\"delta_q_se\":" << d.delta_q_se << ",\"loglik\":" << d.loglik
                      << "}\n";
  };

  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iter; ++iter) {
    double dq = 0.0, se = 0.0;
    BDIParams proposal = theta;
    for (std::uint64_t attempt = 0;; ++attempt) {
      RngStream iter_rng = rng.child(std::uint64_t(iter) + 1, attempt);
      EStepInternal e = estep_internal(intervals, theta, m_paths, iter_rng, opts.sampler);
      const FullMStep ms = mstep_full(e.stats, total_time);
      proposal = BDIParams::full(ms.lambda, ms.mu, ms.nu);
      delta_q(intervals, e.accums, proposal, theta, dq, se);
      if (dq - z * se >= 0.0) break;
      const std::int64_t grown = std::int64_t(std::ceil(opts.growth * double(m_paths)));
      if (grown > opts.max_paths)
        throw budget_exceeded("fit_mcem: Monte Carlo budget exhausted without assured ascent");
      m_paths = grown;
    }
    theta = proposal;
    const double ll = loglik_observed(intervals, theta);
    result.loglik_trace.push_back(ll);

    McemIterDiag d;
    d.iteration = iter + 1;
    d.n_paths = m_paths;
    d.delta_q = dq;
    d.delta_q_se = se;
    d.loglik = ll;
    d.params = theta;
    if (diagnostics) diagnostics->push_back(d);
    emit_telemetry(d);

    if (dq + z * se < opts.stop_tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  result.params_hat = theta;
  result.converged = converged;
  result.iterations = iter;
  result.boundary = theta.lambda <= 1e-12 || theta.mu <= 1e-12 || theta.nu <= 1e-12;
  if (opts.compute_info && !result.boundary) {
    result.info = louis_information_full_mc(intervals, theta, opts.info_paths,
                                            rng.child(0xfacadeULL));
    result.ci = wald_ci({theta.lambda, theta.mu, theta.nu}, result.info, opts.ci_level,
                        opts.log_scale_ci);
  }
  return result;
}

FitResult fit_mcem(const PanelData& panel, const MCEMOptions& opts, RngStream rng,
                   std::vector<McemIterDiag>* diagnostics) {
  return fit_mcem(intervals_from_panel(panel), panel.total_time(), opts, rng, diagnostics);
}

}  // namespace bdi
