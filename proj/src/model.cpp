#include "bdi/model.hpp"

#include <algorithm>
#include <cmath>

namespace bdi {

const BDIParams& validate_params(const BDIParams& params) {
  if (params.lambda < 0.0 || params.mu < 0.0 || params.nu < 0.0 ||
      !std::isfinite(params.lambda) || !std::isfinite(params.mu) || !std::isfinite(params.nu))
    throw negative_rate("rates must be finite and nonnegative");
  switch (params.variant) {
    case Variant::Full:
      break;
    case Variant::RestrictedImmigration:
      if (params.beta < 0.0 || !std::isfinite(params.beta))
        throw variant_violation("restricted immigration: beta must be nonnegative");
      if (params.nu != params.beta * params.lambda)
        throw variant_violation("restricted immigration: nu != beta * lambda");
      break;
    case Variant::DeathImmigration:
      if (params.lambda != 0.0)
        throw variant_violation("death-immigration: lambda must be zero");
      break;
  }
  return params;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::RestrictedImmigration: return "restricted";
    case Variant::DeathImmigration: return "death-immigration";
  }
  return "?";
}

double PanelData::total_time() const {
  double t = 0.0;
  for (const auto& s : individuals)
    if (!s.times.empty()) t += s.times.back() - s.times.front();
  return t;
}

std::size_t PanelData::interval_count() const {
  std::size_t n = 0;
  for (const auto& s : individuals) n += s.times.size() - 1;
  return n;
}

const PanelData& validate_panel(const PanelData& panel) {
  for (const auto& s : panel.individuals) {
    if (s.times.size() != s.counts.size())
      throw invalid_panel("series '" + s.id + "': times/counts length mismatch");
    if (s.times.size() < 2)
      throw invalid_panel("series '" + s.id + "': needs at least 2 observations");
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      if (!(s.times[k] >= 0.0) || !std::isfinite(s.times[k]))
        throw invalid_panel("series '" + s.id + "': times must be finite and nonnegative");
      if (k > 0 && !(s.times[k] > s.times[k - 1]))
        throw invalid_panel("series '" + s.id + "': times must be strictly increasing");
      if (s.counts[k] < 0)
        throw invalid_panel("series '" + s.id + "': counts must be nonnegative");
    }
  }
  return panel;
}

std::vector<Interval> intervals_from_panel(const PanelData& panel) {
  validate_panel(panel);
  std::vector<const ObservationSeries*> order;
  order.reserve(panel.individuals.size());
  for (const auto& s : panel.individuals) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });
  std::vector<Interval> out;
  for (const auto* s : order)
    for (std::size_t k = 0; k + 1 < s->times.size(); ++k)
      out.push_back({s->counts[k], s->counts[k + 1], s->times[k + 1] - s->times[k]});
  return out;
}

std::int64_t Trajectory::final_state() const {
  std::int64_t x = initial_state;
  for (const auto& j : jumps) x += j.direction;
  return x;
}

std::int64_t Trajectory::state_at(double t) const {
  std::int64_t x = initial_state;
  for (const auto& j : jumps) {
    if (j.time > t) break;
    x += j.direction;
  }
  return x;
}

const Trajectory& validate_trajectory(const Trajectory& traj) {
  if (!(traj.horizon > 0.0)) throw invalid_trajectory("horizon must be positive");
  if (traj.initial_state < 0) throw invalid_trajectory("negative initial state");
  std::int64_t x = traj.initial_state;
  double prev = 0.0;
  for (const auto& j : traj.jumps) {
    if (!(j.time > prev) || !(j.time < traj.horizon))
      throw invalid_trajectory("jump times must be strictly increasing inside (0, T)");
    if (j.direction != 1 && j.direction != -1)
      throw invalid_trajectory("jump direction must be +1 or -1");
    if (j.direction == -1 && x == 0)
      throw invalid_trajectory("down jump from state 0");
    x += j.direction;
    prev = j.time;
  }
  return traj;
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& other) {
  n_plus += other.n_plus;
  n_minus += other.n_minus;
  particle_time += other.particle_time;
  for (const auto& [state, count] : other.upjumps_by_state) upjumps_by_state[state] += count;
  return *this;
}

SufficientStats sufficient_stats(const Trajectory& traj) {
  validate_trajectory(traj);
  SufficientStats s;
  std::int64_t x = traj.initial_state;
  double prev = 0.0;
  for (const auto& j : traj.jumps) {
    s.particle_time += double(x) * (j.time - prev);
    if (j.direction == 1) {
      ++s.n_plus;
      ++s.upjumps_by_state[x];
    } else {
      ++s.n_minus;
    }
    x += j.direction;
    prev = j.time;
  }
  s.particle_time += double(x) * (traj.horizon - prev);
  return s;
}

double loglik_complete(const SufficientStats& stats, double horizon, const BDIParams& params) {
  validate_params(params);
  const double R = stats.particle_time;
  const double T = horizon;
  auto count_log = [](double count, double rate) {
    if (count == 0.0) return 0.0;
    return rate > 0.0 ? count * std::log(rate) : -inf;
  };
  switch (params.variant) {
    case Variant::RestrictedImmigration:
      return -R * (params.lambda + params.mu) - T * params.beta * params.lambda +
             count_log(double(stats.n_plus), params.lambda) +
             count_log(double(stats.n_minus), params.mu);
    case Variant::DeathImmigration:
      return -R * params.mu - T * params.nu +
             count_log(double(stats.n_plus), params.nu) +
             count_log(double(stats.n_minus), params.mu);
    case Variant::Full: {
      double ll = -(R * (params.lambda + params.mu) + T * params.nu) +
                  count_log(double(stats.n_minus), params.mu);
      for (const auto& [state, count] : stats.upjumps_by_state)
        ll += count_log(double(count), double(state) * params.lambda + params.nu);
      return ll;
    }
  }
  return -inf;
}

double loglik_complete(const Trajectory& traj, const BDIParams& params) {
  return loglik_complete(sufficient_stats(traj), traj.horizon, params);
}

}  // namespace bdi
