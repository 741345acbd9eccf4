#include "bdi/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "bdi/genfun.hpp"

namespace bdi {

namespace {

constexpr std::int64_t kForwardJumpGuard = 10'000'000;
constexpr std::int64_t kDirectJumpGuard = 1'000'000;
constexpr double kEndpointFloor = 1e-14;

}  // namespace

Trajectory simulate_forward(std::int64_t i0, double T, const BDIParams& params, RngStream& rng) {
  validate_params(params);
  if (i0 < 0) throw error("simulate_forward: negative initial state");
  if (!(T >= 0.0)) throw error("simulate_forward: negative horizon");
  Trajectory traj;
  traj.initial_state = i0;
  traj.horizon = T;
  std::int64_t x = i0;
  double t = 0.0;
  while (true) {
    const double up = double(x) * params.lambda + params.nu;
    const double down = double(x) * params.mu;
    const double total = up + down;
    if (total <= 0.0) break;  // absorbed: no events possible
    t += rng.exponential(total);
    if (t >= T) break;
    const int dir = rng.u01() * total < up ? +1 : -1;
    traj.jumps.push_back({t, dir});
    x += dir;
    if (std::int64_t(traj.jumps.size()) > kForwardJumpGuard)
      throw explosion_guard("simulate_forward: jump count exceeded 1e7");
  }
  return traj;
}

ConditionedSampler::ConditionedSampler(std::int64_t a, std::int64_t b, double T,
                                       const BDIParams& params, SamplerOptions opts)
    : a_(a), b_(b), T_(T), params_(params), opts_(opts) {
  validate_params(params_);
  if (a < 0 || b < 0) throw error("ConditionedSampler: negative state");
  if (!(T > 0.0)) throw error("ConditionedSampler: horizon must be positive");
  p_ab_ = transition_prob(a_, b_, T_, params_);
  if (p_ab_ <= kEndpointFloor)
    throw improbable_endpoint("endpoint probability below 1e-14 for (" + std::to_string(a) +
                              " -> " + std::to_string(b) + ", T=" + std::to_string(T) + ")");
  switch (opts_.strategy) {
    case Strategy::Rejection: chosen_ = Strategy::Rejection; break;
    case Strategy::Direct: chosen_ = Strategy::Direct; break;
    case Strategy::Auto:
      chosen_ = p_ab_ >= opts_.rejection_threshold ? Strategy::Rejection : Strategy::Direct;
      break;
  }
}

const Cheb& ConditionedSampler::prob_curve(std::int64_t x) {
  auto it = curves_.find(x);
  if (it != curves_.end()) return it->second;
  // Node count scaled to the time-rate product so the interpolant stays
  // spectrally accurate (values are entries of a matrix exponential, entire
  // in sigma).
  const double ref_state = double(std::max({a_, b_, x, std::int64_t(5)})) + 5.0;
  const double qT = ((params_.lambda + params_.mu) * ref_state + params_.nu) * T_;
  const std::size_t n_nodes = std::size_t(std::max(33.0, 1.8 * qT + 24.0));
  const auto xs = Cheb::nodes(0.0, T_, n_nodes);
  std::vector<double> vals(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k)
    vals[k] = transition_prob(x, b_, xs[k], params_);
  it = curves_.emplace(x, Cheb(0.0, T_, std::move(vals))).first;
  return it->second;
}

JumpLaw ConditionedSampler::compute_jump_law(std::int64_t from, double horizon) {
  JumpLaw law;
  const double lam_tot = double(from) * (params_.lambda + params_.mu) + params_.nu;
  const double rate_up = double(from) * params_.lambda + params_.nu;
  const double rate_down = double(from) * params_.mu;

  const Cheb& here = prob_curve(from);
  const double den = std::max(here(horizon), 0.0);
  if (den <= kEndpointFloor)
    throw improbable_endpoint("conditioned recursion hit an endpoint probability below floor");

  if (from == b_) law.p_stay = std::exp(-lam_tot * horizon) / den;

  auto make_branch = [&](std::int64_t to, double rate, Pchip& F_out, double& p_out) {
    if (rate <= 0.0 || to < 0) return false;
    const Cheb& next = prob_curve(to);
    auto f = [&](double tau) {
      const double p = std::max(next(horizon - tau), 0.0);
      return std::exp(-lam_tot * tau) * rate * p / den;
    };
    CdfTable tab = build_cdf(f, 0.0, horizon, opts_.quad_tol);
    p_out = tab.total;
    if (tab.total > 0.0) {
      for (auto& v : tab.F) v /= tab.total;
      F_out = Pchip(std::move(tab.x), std::move(tab.F));
      return true;
    }
    return false;
  };

  law.has_up = make_branch(from + 1, rate_up, law.F_up, law.p_up);
  law.has_down = make_branch(from - 1, rate_down, law.F_down, law.p_down);
  return law;
}

Trajectory ConditionedSampler::sample_direct(RngStream& rng) {
  Trajectory traj;
  traj.initial_state = a_;
  traj.horizon = T_;
  std::int64_t x = a_;
  double elapsed = 0.0;

  while (true) {
    double remaining = T_ - elapsed;
    if (!(remaining > 0.0)) break;
    const JumpLaw* law;
    JumpLaw local;
    if (elapsed == 0.0) {
      if (!first_law_) first_law_ = compute_jump_law(a_, T_);
      law = &*first_law_;
    } else {
      local = compute_jump_law(x, remaining);
      law = &local;
    }

    const double total = law->p_stay + law->p_up + law->p_down;
    double u = rng.u01() * total;
    if (x == b_ && u < law->p_stay) break;  // no further jumps; path ends at b
    u -= law->p_stay;
    int dir;
    const Pchip* F;
    if (law->has_up && u < law->p_up) {
      dir = +1;
      F = &law->F_up;
    } else if (law->has_down) {
      dir = -1;
      F = &law->F_down;
    } else if (law->has_up) {
      dir = +1;
      F = &law->F_up;
    } else {
      throw sampler_failure("conditioned recursion: no feasible branch");
    }
    const double tau = F->invert(rng.u01(), opts_.invert_tol);
    // Clamp into the open interval so the trajectory stays valid.
    const double eps = remaining * 1e-12;
    const double jump_at = elapsed + std::min(std::max(tau, eps), remaining - eps);
    traj.jumps.push_back({jump_at, dir});
    x += dir;
    elapsed = jump_at;
    if (std::int64_t(traj.jumps.size()) > kDirectJumpGuard)
      throw recursion_depth("conditioned recursion: jump count exceeded 1e6");
  }

  if (traj.final_state() != b_)
    throw sampler_failure("conditioned recursion terminated off the target endpoint");
  return traj;
}

Trajectory ConditionedSampler::sample_rejection(RngStream& rng, std::int64_t max_tries,
                                                std::int64_t* tries) {
  if (max_tries < 1) throw error("sample_rejection: max_tries must be >= 1");
  for (std::int64_t k = 0; k < max_tries; ++k) {
    Trajectory traj = simulate_forward(a_, T_, params_, rng);
    if (traj.final_state() == b_) {
      if (tries) *tries = k + 1;
      return traj;
    }
  }
  throw max_tries_exceeded("rejection sampler: no acceptance in " + std::to_string(max_tries) +
                           " tries");
}

Trajectory ConditionedSampler::sample(RngStream& rng) {
  if (chosen_ == Strategy::Rejection) {
    std::int64_t max_tries = opts_.max_tries;
    if (max_tries < 0)
      max_tries = std::int64_t(std::max(1000.0, std::ceil(200.0 / std::max(p_ab_, 1e-6))));
    try {
      return sample_rejection(rng, max_tries);
    } catch (const max_tries_exceeded&) {
      // The direct method draws from the exact conditional law, so falling
      // back keeps the output distribution intact.
      return sample_direct(rng);
    }
  }
  return sample_direct(rng);
}

Trajectory sample_conditioned_direct(std::int64_t a, std::int64_t b, double T,
                                     const BDIParams& params, RngStream& rng) {
  ConditionedSampler s(a, b, T, params);
  return s.sample_direct(rng);
}

Trajectory sample_conditioned_rejection(std::int64_t a, std::int64_t b, double T,
                                        const BDIParams& params, RngStream& rng,
                                        std::int64_t max_tries) {
  ConditionedSampler s(a, b, T, params);
  return s.sample_rejection(rng, max_tries);
}

Trajectory sample_conditioned(std::int64_t a, std::int64_t b, double T, const BDIParams& params,
                              RngStream& rng) {
  ConditionedSampler s(a, b, T, params);
  return s.sample(rng);
}

}  // namespace bdi
