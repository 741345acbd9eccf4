#include "bdi/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "bdi/common.hpp"

namespace bdi {

namespace {

constexpr double kH1 = 1e-4;        // first-order central step in u, v
constexpr double kH2 = 1e-3;        // second-order step
constexpr double kProbFloor = 1e-14;
constexpr double kNegativeMomentTol = 1e-8;

double w_step(const BDIParams& params, double h) {
  return h * std::max(1.0, params.lambda + params.mu);
}

// Stencil builder: appends points/weights for one derivative combination.
struct StencilSet {
  std::vector<gfc::Point> points;
  std::vector<std::vector<double>> weights;

  std::size_t add_point(double u, double v, double w) {
    points.push_back({u, v, w});
    for (auto& row : weights) row.push_back(0.0);
    return points.size() - 1;
  }

  std::size_t new_output() {
    weights.emplace_back(points.size(), 0.0);
    return weights.size() - 1;
  }

  void set(std::size_t out, std::size_t pt, double w) { weights[out][pt] = w; }
};

enum class Var { U, V, W };

gfc::Point shifted(Var a, double ha, Var b, double hb) {
  gfc::Point p{1.0, 1.0, 0.0};
  auto apply = [&](Var v, double h) {
    switch (v) {
      case Var::U: p.u += h; break;
      case Var::V: p.v += h; break;
      case Var::W: p.w += h; break;
    }
  };
  apply(a, ha);
  apply(b, hb);
  return p;
}

// First derivative d/dx at (1,1,0): fourth-order central stencil.  The extra
// two points keep the truncation error below the 1e-8 cross-validation
// tolerance for the particle-time transform, whose higher derivatives grow
// like moments of R.
std::size_t add_first(StencilSet& s, Var x, double h) {
  const std::size_t out = s.new_output();
  const double offs[4] = {-2.0, -1.0, 1.0, 2.0};
  const double cf[4] = {1.0 / (12.0 * h), -8.0 / (12.0 * h), 8.0 / (12.0 * h),
                        -1.0 / (12.0 * h)};
  for (int k = 0; k < 4; ++k) {
    const auto p = shifted(x, offs[k] * h, x, 0.0);
    s.set(out, s.add_point(p.u, p.v, p.w), cf[k]);
  }
  return out;
}

// second derivative d2/dx2 at (1,1,0), 5-point central
std::size_t add_second(StencilSet& s, Var x, double h) {
  const std::size_t out = s.new_output();
  const double c = 1.0 / (12.0 * h * h);
  const double offs[5] = {-2.0, -1.0, 0.0, 1.0, 2.0};
  const double cf[5] = {-c, 16.0 * c, -30.0 * c, 16.0 * c, -c};
  for (int k = 0; k < 5; ++k) {
    const auto p = shifted(x, offs[k] * h, x, 0.0);
    s.set(out, s.add_point(p.u, p.v, p.w), cf[k]);
  }
  return out;
}

// Mixed d2/dxdy at (1,1,0): 4-point cross stencils at h and 2h combined by
// Richardson extrapolation.  The plain cross is only O(h^2) and its error
// grows with moments like E[N+ R^3], which is what the Louis covariance
// cancellations are sensitive to on long intervals.
std::size_t add_cross(StencilSet& s, Var x, double hx, Var y, double hy) {
  const std::size_t out = s.new_output();
  const double sx[4] = {1.0, 1.0, -1.0, -1.0};
  const double sy[4] = {1.0, -1.0, 1.0, -1.0};
  const double c1 = 4.0 / 3.0 / (4.0 * hx * hy);
  const double c2 = -1.0 / 3.0 / (16.0 * hx * hy);
  for (int k = 0; k < 4; ++k) {
    const auto p = shifted(x, sx[k] * hx, y, sy[k] * hy);
    s.set(out, s.add_point(p.u, p.v, p.w), sx[k] * sy[k] * c1);
    const auto p2 = shifted(x, 2.0 * sx[k] * hx, y, 2.0 * sy[k] * hy);
    s.set(out, s.add_point(p2.u, p2.v, p2.w), sx[k] * sy[k] * c2);
  }
  return out;
}

struct FullMomentOutputs {
  std::size_t base, du, dv, dw, duu, dvv, dww, duv, duw, dvw;
};

FullMomentOutputs build_full_stencil(StencilSet& s, const BDIParams& params) {
  FullMomentOutputs o{};
  o.base = s.new_output();
  s.set(o.base, s.add_point(1.0, 1.0, 0.0), 1.0);
  o.du = add_first(s, Var::U, kH1);
  o.dv = add_first(s, Var::V, kH1);
  o.dw = add_first(s, Var::W, w_step(params, kH1));
  o.duu = add_second(s, Var::U, kH2);
  o.dvv = add_second(s, Var::V, kH2);
  o.dww = add_second(s, Var::W, w_step(params, kH2));
  o.duv = add_cross(s, Var::U, kH2, Var::V, kH2);
  o.duw = add_cross(s, Var::U, kH2, Var::W, w_step(params, kH2));
  o.dvw = add_cross(s, Var::V, kH2, Var::W, w_step(params, kH2));
  return o;
}

double clamp_moment(double x, const char* what) {
  if (x < -kNegativeMomentTol)
    throw negative_moment(std::string(what) + " came out below -1e-8 (step-size failure)");
  return std::max(x, 0.0);
}

struct RestrictedSet {
  double p;
  double up, down, pt;
  double up_sq, down_sq, pt_sq, up_down, up_pt, down_pt;
};

RestrictedSet restricted_full(std::int64_t i, std::int64_t j, double t,
                              const BDIParams& params) {
  StencilSet s;
  const FullMomentOutputs o = build_full_stencil(s, params);
  const auto c = gfc::coeffs(i, t, j, params, s.points, s.weights);
  RestrictedSet r{};
  r.p = c[o.base];
  r.up = clamp_moment(c[o.du], "restricted up moment");
  r.down = clamp_moment(c[o.dv], "restricted down moment");
  r.pt = clamp_moment(-c[o.dw], "restricted particle-time moment");
  // Factorial-moment correction: u-derivatives give E[N(N-1) 1{.}].
  r.up_sq = clamp_moment(c[o.duu] + c[o.du], "restricted up second moment");
  r.down_sq = clamp_moment(c[o.dvv] + c[o.dv], "restricted down second moment");
  r.pt_sq = clamp_moment(c[o.dww], "restricted particle-time second moment");
  r.up_down = clamp_moment(c[o.duv], "restricted up*down moment");
  r.up_pt = clamp_moment(-c[o.duw], "restricted up*particle-time moment");
  r.down_pt = clamp_moment(-c[o.dvw], "restricted down*particle-time moment");
  return r;
}

}  // namespace

double restricted_moment(MomentKind kind, std::int64_t i, std::int64_t j, double t,
                         const BDIParams& params) {
  validate_params(params);
  if (!(t > 0.0)) throw error("restricted_moment: t must be positive");
  StencilSet s;
  switch (kind) {
    case MomentKind::Up: {
      const auto out = add_first(s, Var::U, kH1);
      (void)out;
      return clamp_moment(gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted up moment");
    }
    case MomentKind::Down: {
      add_first(s, Var::V, kH1);
      return clamp_moment(gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted down moment");
    }
    case MomentKind::ParticleTime: {
      add_first(s, Var::W, w_step(params, kH1));
      return clamp_moment(-gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted particle-time moment");
    }
    case MomentKind::UpSq: {
      add_second(s, Var::U, kH2);
      add_first(s, Var::U, kH1);
      const auto c = gfc::coeffs(i, t, j, params, s.points, s.weights);
      return clamp_moment(c[0] + c[1], "restricted up second moment");
    }
    case MomentKind::DownSq: {
      add_second(s, Var::V, kH2);
      add_first(s, Var::V, kH1);
      const auto c = gfc::coeffs(i, t, j, params, s.points, s.weights);
      return clamp_moment(c[0] + c[1], "restricted down second moment");
    }
    case MomentKind::ParticleTimeSq: {
      add_second(s, Var::W, w_step(params, kH2));
      return clamp_moment(gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted particle-time second moment");
    }
    case MomentKind::UpDown: {
      add_cross(s, Var::U, kH2, Var::V, kH2);
      return clamp_moment(gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted up*down moment");
    }
    case MomentKind::UpParticleTime: {
      add_cross(s, Var::U, kH2, Var::W, w_step(params, kH2));
      return clamp_moment(-gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted up*particle-time moment");
    }
    case MomentKind::DownParticleTime: {
      add_cross(s, Var::V, kH2, Var::W, w_step(params, kH2));
      return clamp_moment(-gfc::coeffs(i, t, j, params, s.points, s.weights)[0],
                          "restricted down*particle-time moment");
    }
  }
  throw error("restricted_moment: unknown kind");
}

IntervalMoments conditional_moments(std::int64_t i, std::int64_t j, double t,
                                    const BDIParams& params, bool with_second) {
  validate_params(params);
  if (!(t > 0.0)) throw error("conditional_moments: t must be positive");
  IntervalMoments m{};
  if (with_second) {
    const RestrictedSet r = restricted_full(i, j, t, params);
    if (r.p <= kProbFloor)
      throw improbable_endpoint("transition probability below 1e-14 floor");
    m.p = r.p;
    m.U = r.up / r.p;
    m.D = r.down / r.p;
    m.P = r.pt / r.p;
    m.up_sq = r.up_sq / r.p;
    m.down_sq = r.down_sq / r.p;
    m.pt_sq = r.pt_sq / r.p;
    m.up_down = r.up_down / r.p;
    m.up_pt = r.up_pt / r.p;
    m.down_pt = r.down_pt / r.p;
    return m;
  }
  StencilSet s;
  const std::size_t base = s.new_output();
  s.set(base, s.add_point(1.0, 1.0, 0.0), 1.0);
  add_first(s, Var::U, kH1);
  add_first(s, Var::V, kH1);
  add_first(s, Var::W, w_step(params, kH1));
  const auto c = gfc::coeffs(i, t, j, params, s.points, s.weights);
  const double p = c[0];
  if (p <= kProbFloor) throw improbable_endpoint("transition probability below 1e-14 floor");
  m.p = p;
  m.U = clamp_moment(c[1], "restricted up moment") / p;
  m.D = clamp_moment(c[2], "restricted down moment") / p;
  m.P = clamp_moment(-c[3], "restricted particle-time moment") / p;
  return m;
}

ConditionalExpectations conditional_expectations(std::int64_t i, std::int64_t j, double t,
                                                 const BDIParams& params) {
  const IntervalMoments m = conditional_moments(i, j, t, params, false);
  return {m.U, m.D, m.P};
}

namespace {

using TripleKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

std::int64_t quantize_len(double t) { return std::int64_t(std::llround(t * 1e12)); }

template <typename Result, typename Fn>
std::pair<std::vector<Result>, std::vector<std::size_t>> compute_unique(
    const std::vector<Interval>& intervals, Fn&& fn) {
  std::map<TripleKey, std::size_t> uniq;
  std::vector<Interval> reps;
  std::vector<std::size_t> idx(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const TripleKey key{intervals[k].start_state, intervals[k].end_state,
                        quantize_len(intervals[k].length)};
    auto [it, inserted] = uniq.emplace(key, reps.size());
    if (inserted) reps.push_back(intervals[k]);
    idx[k] = it->second;
  }
  std::vector<Result> results(reps.size());
  std::vector<std::exception_ptr> errs(reps.size());
  parallel_for(reps.size(), [&](std::size_t k) {
    try {
      results[k] = fn(reps[k]);
    } catch (...) {
      errs[k] = std::current_exception();
    }
  });
  // Report the first failing interval in deterministic (input) order.
  for (std::size_t k = 0; k < intervals.size(); ++k)
    if (errs[idx[k]]) {
      try {
        std::rethrow_exception(errs[idx[k]]);
      } catch (const improbable_endpoint& e) {
        throw improbable_endpoint("interval #" + std::to_string(k) + " (" +
                                  std::to_string(intervals[k].start_state) + " -> " +
                                  std::to_string(intervals[k].end_state) +
                                  ", t=" + std::to_string(intervals[k].length) +
                                  "): " + e.what());
      }
    }
  return {std::move(results), std::move(idx)};
}

}  // namespace

PanelExpectedStats panel_expected_stats(const std::vector<Interval>& intervals,
                                        const BDIParams& params) {
  validate_params(params);
  auto [moments, idx] = compute_unique<IntervalMoments>(
      intervals, [&](const Interval& iv) {
        return conditional_moments(iv.start_state, iv.end_state, iv.length, params, false);
      });
  PanelExpectedStats out;
  out.per_interval.reserve(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const IntervalMoments& m = moments[idx[k]];
    out.per_interval.push_back({intervals[k], m.p, m.U, m.D, m.P});
    out.U_total += m.U;
    out.D_total += m.D;
    out.P_total += m.P;
    out.loglik += std::log(m.p);
  }
  return out;
}

PanelExpectedStats panel_expected_stats(const PanelData& panel, const BDIParams& params) {
  return panel_expected_stats(intervals_from_panel(panel), params);
}

std::vector<IntervalMoments> panel_interval_moments(const std::vector<Interval>& intervals,
                                                    const BDIParams& params) {
  validate_params(params);
  auto [moments, idx] = compute_unique<IntervalMoments>(
      intervals, [&](const Interval& iv) {
        return conditional_moments(iv.start_state, iv.end_state, iv.length, params, true);
      });
  std::vector<IntervalMoments> out;
  out.reserve(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) out.push_back(moments[idx[k]]);
  return out;
}

}  // namespace bdi
