#include "bdi/genfun.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

#include "bdi/common.hpp"
#include "bdi/kernel.hpp"

namespace bdi {

namespace {

constexpr std::size_t kStartK = 1024;
constexpr std::size_t kMaxK = std::size_t(1) << 20;
constexpr double kDoublingTol = 1e-10;
constexpr double kDegenerateTol = 1e-12;
constexpr double kRichardsonShift = 1e-7;
constexpr double kGuardArgStep = 0.5;
constexpr double kStencilMargin = 0.05;

// (1 - e^{-x}) / x, entire.
double phi1(double x) {
  if (std::abs(x) < 1e-4)
    return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
  return -std::expm1(-x) / x;
}

// (e^{-x} - 1 + x) / x^2, entire.
double psi2(double x) {
  if (std::abs(x) < 1e-3)
    return 0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0;
  return (std::expm1(-x) + x) / (x * x);
}

struct Prepared {
  kernel::PointEval pe;
  bool degenerate = false;
};

Prepared prepare_point(std::int64_t init_state, double t, const BDIParams& params,
                       double u, double v, double w) {
  Prepared out;
  kernel::PointEval& pe = out.pe;
  pe.ipow = int(init_state);
  const double lam = params.lambda, mu = params.mu, nu = params.nu;
  if (lam == 0.0) {
    pe.lambda_zero = true;
    const double qw = mu + w;
    const double x = qw * t;
    pe.B0 = std::exp(-x);
    pe.A0 = v * mu * t * phi1(x);
    pe.c1 = nu * u * t * phi1(x);
    pe.c0 = nu * u * v * mu * t * t * psi2(x) - nu * t;
    return out;
  }
  const double c = lam + mu + w;
  const double disc = c * c - 4.0 * lam * mu * u * v;
  const std::complex<double> S =
      disc >= 0.0 ? std::complex<double>(std::sqrt(disc), 0.0)
                  : std::complex<double>(0.0, std::sqrt(-disc));
  const double den = 2.0 * lam * u;
  pe.a1 = (c - S) / den;
  pe.a2 = (c + S) / den;
  pe.dalpha = pe.a1 - pe.a2;
  pe.E = std::exp(-S * t);
  pe.a2E = pe.a2 * pe.E;
  pe.c3 = std::exp(-nu * (1.0 - u * pe.a1) * t);
  pe.q = nu / lam;
  const double qr = std::round(pe.q);
  if (std::abs(pe.q - qr) < 1e-12 && qr >= 0.0 && qr <= 4096.0) {
    pe.q_integer = true;
    pe.qint = int(qr);
  }
  out.degenerate = std::abs(pe.dalpha) < kDegenerateTol;
  return out;
}

// ------------------------------------------------------------------ twiddles

struct Twiddles {
  std::vector<double> cos_v, sin_v;
};

const Twiddles& twiddles_for(std::size_t K) {
  // K in {2^10, ..., 2^20}
  static std::array<Twiddles, 11> tables;
  static std::array<std::once_flag, 11> flags;
  int slot = std::countr_zero(K) - 10;
  std::call_once(flags[std::size_t(slot)], [K, slot] {
    Twiddles& tw = tables[std::size_t(slot)];
    tw.cos_v.resize(K);
    tw.sin_v.resize(K);
    const double step = 2.0 * M_PI / double(K);
    for (std::size_t m = 0; m < K; ++m) {
      const double ang = step * double(m);
      tw.cos_v[m] = std::cos(ang);
      tw.sin_v[m] = std::sin(ang);
    }
  });
  return tables[std::size_t(slot)];
}

void guard_scan(const double* args, std::size_t n) {
  for (std::size_t m = 0; m + 1 < n; ++m)
    if (std::abs(args[m + 1] - args[m]) > kGuardArgStep)
      throw inversion_unstable("branch-continuity guard tripped on the s-circle");
  if (n > 1 && std::abs(args[0] - args[n - 1]) > kGuardArgStep)
    throw inversion_unstable("branch-continuity guard tripped at circle closure");
}

}  // namespace

Alphas compute_alphas(double u, double v, double w, const BDIParams& params) {
  validate_params(params);
  if (!(params.lambda * u > 0.0))
    throw error("compute_alphas requires lambda * u > 0");
  const double c = params.lambda + params.mu + w;
  const double disc = c * c - 4.0 * params.lambda * params.mu * u * v;
  const std::complex<double> S =
      disc >= 0.0 ? std::complex<double>(std::sqrt(disc), 0.0)
                  : std::complex<double>(0.0, std::sqrt(-disc));
  const double den = 2.0 * params.lambda * u;
  return {(c - S) / den, (c + S) / den};
}

std::complex<double> eval_H(std::int64_t init_state, const GFPoint& p, const BDIParams& params) {
  validate_params(params);
  if (init_state < 0) throw error("eval_H: negative initial state");
  if (!(p.t >= 0.0)) throw error("eval_H: t must be nonnegative");
  if (std::abs(p.s) > 1.0 + 1e-12) throw error("eval_H: |s| must be <= 1 + 1e-12");
  const double margin = kStencilMargin * std::max(1.0, params.lambda + params.mu);
  if (p.u < 0.0 || p.u > 1.0 + kStencilMargin || p.v < 0.0 || p.v > 1.0 + kStencilMargin ||
      p.w < -margin)
    throw error("eval_H: (u, v, w) outside the supported stencil range");
  if (p.t == 0.0) {
    std::complex<double> r{1.0, 0.0};
    for (std::int64_t k = 0; k < init_state; ++k) r *= p.s;
    return r;
  }
  Prepared prep = prepare_point(init_state, p.t, params, p.u, p.v, p.w);
  if (prep.degenerate)
    throw branch_degenerate("eval_H: nearly coincident roots (use coefficient layer)");
  return kernel::eval_point(prep.pe, p.s);
}

namespace gfc {

std::vector<double> coeffs(std::int64_t init_state, double t, std::int64_t j,
                           const BDIParams& params,
                           const std::vector<Point>& points,
                           const std::vector<std::vector<double>>& weights) {
  validate_params(params);
  if (init_state < 0) throw error("coeffs: negative initial state");
  if (!(t >= 0.0)) throw error("coeffs: t must be nonnegative");
  const std::size_t n_out = weights.size();
  for (const auto& row : weights)
    if (row.size() != points.size()) throw error("coeffs: weight row size mismatch");

  std::vector<double> out(n_out, 0.0);
  if (j < 0) return out;
  if (t == 0.0) {
    // H = s^i for every (u, v, w): the coefficient is the indicator {i == j}.
    if (init_state == j)
      for (std::size_t m = 0; m < n_out; ++m)
        for (std::size_t p = 0; p < points.size(); ++p) out[m] += weights[m][p];
    return out;
  }

  // Prepare evaluation points; a degenerate point (coincident roots) is
  // replaced by its two w-shifted Richardson substitutes with weights 2, -1.
  std::vector<kernel::PointEval> evals;
  std::vector<std::vector<double>> wts(n_out);
  for (std::size_t p = 0; p < points.size(); ++p) {
    Prepared prep = prepare_point(init_state, t, params, points[p].u, points[p].v, points[p].w);
    if (!prep.degenerate) {
      evals.push_back(prep.pe);
      for (std::size_t m = 0; m < n_out; ++m) wts[m].push_back(weights[m][p]);
    } else {
      Prepared p1 = prepare_point(init_state, t, params, points[p].u, points[p].v,
                                  points[p].w + kRichardsonShift);
      Prepared p2 = prepare_point(init_state, t, params, points[p].u, points[p].v,
                                  points[p].w + 2.0 * kRichardsonShift);
      if (p1.degenerate || p2.degenerate)
        throw branch_degenerate("coeffs: roots remain coincident after w shift");
      evals.push_back(p1.pe);
      evals.push_back(p2.pe);
      for (std::size_t m = 0; m < n_out; ++m) {
        wts[m].push_back(2.0 * weights[m][p]);
        wts[m].push_back(-weights[m][p]);
      }
    }
  }

  const std::size_t P = evals.size();
  std::vector<double> flat_w(n_out * P);
  bool any_guard = false;
  for (std::size_t m = 0; m < n_out; ++m)
    for (std::size_t p = 0; p < P; ++p) flat_w[m * P + p] = wts[m][p];
  for (const auto& pe : evals) any_guard = any_guard || pe.needs_guard();

  std::vector<double> sums_re(n_out, 0.0), sums_im(n_out, 0.0);
  std::vector<double> args;
  const auto sweep = kernel::sweep();

  auto run_sweep = [&](std::size_t K2, std::size_t offset, std::size_t stride,
                       std::size_t count) {
    const Twiddles& tw = twiddles_for(K2);
    kernel::SweepRange range{tw.cos_v.data(), tw.sin_v.data(), K2, offset, stride, count,
                             std::size_t(j)};
    double* argbuf = nullptr;
    if (any_guard) {
      args.assign(P * count, 0.0);
      argbuf = args.data();
    }
    sweep(evals.data(), P, flat_w.data(), n_out, range, sums_re.data(), sums_im.data(),
          argbuf);
    if (argbuf)
      for (std::size_t p = 0; p < P; ++p)
        if (evals[p].needs_guard())
          guard_scan(args.data() + p * count, count);
  };

  auto combine = [&](std::size_t K) {
    std::vector<std::complex<double>> c(n_out);
    for (std::size_t m = 0; m < n_out; ++m)
      c[m] = std::complex<double>{sums_re[m], sums_im[m]} / double(K);
    return c;
  };

  run_sweep(kStartK, 0, 1, kStartK);
  std::vector<std::complex<double>> prev = combine(kStartK);

  for (std::size_t K = kStartK; K < kMaxK;) {
    const std::size_t K2 = 2 * K;
    run_sweep(K2, 1, 2, K);
    std::vector<std::complex<double>> cur = combine(K2);
    bool converged = true;
    for (std::size_t m = 0; m < n_out; ++m) {
      if (std::abs(cur[m] - prev[m]) >= kDoublingTol * std::max(1.0, std::abs(cur[m]))) {
        converged = false;
        break;
      }
    }
    if (converged) {
      double wscale = 0.0;
      for (std::size_t m = 0; m < n_out; ++m)
        for (double wmp : wts[m]) wscale = std::max(wscale, std::abs(wmp));
      for (std::size_t m = 0; m < n_out; ++m) {
        const double imag_tol = 1e-6 * std::max(1.0, std::abs(cur[m].real())) + 1e-8 * wscale;
        if (std::abs(cur[m].imag()) > imag_tol)
          throw inversion_unstable("coefficient has non-negligible imaginary residual");
        out[m] = cur[m].real();
      }
      return out;
    }
    prev = std::move(cur);
    K = K2;
  }
  throw inversion_unstable("Riemann sum did not converge before K = 2^20");
}

}  // namespace gfc

// --------------------------------------------------------------- cache layer

namespace {

std::uint64_t params_hash(const BDIParams& p) {
  auto mix = [](std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  };
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  h = mix(h, std::bit_cast<std::uint64_t>(p.lambda));
  h = mix(h, std::bit_cast<std::uint64_t>(p.mu));
  h = mix(h, std::bit_cast<std::uint64_t>(p.nu));
  h = mix(h, std::bit_cast<std::uint64_t>(p.beta));
  h = mix(h, std::uint64_t(p.variant));
  return h;
}

struct TransKey {
  std::int64_t i, j, tq;
  std::uint64_t ph;
  bool operator==(const TransKey&) const = default;
};

struct TransKeyHash {
  std::size_t operator()(const TransKey& k) const {
    std::uint64_t h = k.ph;
    auto mix = [&](std::uint64_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(std::uint64_t(k.i));
    mix(std::uint64_t(k.j));
    mix(std::uint64_t(k.tq));
    return std::size_t(h);
  }
};

// t quantized to an absolute 1e-12 grid; the sampler re-queries bit-identical
// times so this only needs to merge values that are equal for all purposes.
std::int64_t quantize_t(double t) { return std::int64_t(std::llround(t * 1e12)); }

constexpr std::size_t kCacheShards = 16;
constexpr std::size_t kCacheShardCap = 1u << 18;

struct CacheShard {
  std::mutex mtx;
  std::unordered_map<TransKey, double, TransKeyHash> map;
};

std::array<CacheShard, kCacheShards>& cache_shards() {
  static std::array<CacheShard, kCacheShards> shards;
  return shards;
}

CacheShard& shard_for(const TransKey& k) {
  return cache_shards()[TransKeyHash{}(k) % kCacheShards];
}

}  // namespace

void clear_transition_cache() {
  for (auto& shard : cache_shards()) {
    std::lock_guard<std::mutex> lk(shard.mtx);
    shard.map.clear();
  }
}

double transition_prob(std::int64_t i, std::int64_t j, double t, const BDIParams& params) {
  validate_params(params);
  if (i < 0) throw error("transition_prob: negative start state");
  if (!(t >= 0.0)) throw error("transition_prob: t must be nonnegative");
  if (j < 0) return 0.0;
  if (t == 0.0) return i == j ? 1.0 : 0.0;

  const TransKey key{i, j, quantize_t(t), params_hash(params)};
  CacheShard& shard = shard_for(key);
  {
    std::lock_guard<std::mutex> lk(shard.mtx);
    auto it = shard.map.find(key);
    if (it != shard.map.end()) return it->second;
  }

  const std::vector<gfc::Point> pts{{1.0, 1.0, 0.0}};
  const std::vector<std::vector<double>> w{{1.0}};
  double p = gfc::coeffs(i, t, j, params, pts, w)[0];
  if (p < 0.0) {
    if (p < -1e-10) throw inversion_unstable("transition probability below -1e-10");
    p = 0.0;
  }
  if (p > 1.0) {
    if (p > 1.0 + 1e-8) throw inversion_unstable("transition probability above 1 + 1e-8");
    p = 1.0;
  }

  {
    std::lock_guard<std::mutex> lk(shard.mtx);
    if (shard.map.size() >= kCacheShardCap) shard.map.clear();
    shard.map.emplace(key, p);
  }
  return p;
}

double loglik_observed(const std::vector<Interval>& intervals, const BDIParams& params) {
  validate_params(params);
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::size_t> uniq;
  std::vector<Interval> reps;
  std::vector<std::size_t> idx(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const auto key = std::make_tuple(intervals[k].start_state, intervals[k].end_state,
                                     quantize_t(intervals[k].length));
    auto [it, inserted] = uniq.emplace(key, reps.size());
    if (inserted) reps.push_back(intervals[k]);
    idx[k] = it->second;
  }
  std::vector<double> probs(reps.size());
  parallel_for(reps.size(), [&](std::size_t k) {
    probs[k] = transition_prob(reps[k].start_state, reps[k].end_state, reps[k].length, params);
  });
  double ll = 0.0;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const double p = probs[idx[k]];
    if (p <= 0.0) return -inf;
    ll += std::log(p);
  }
  return ll;
}

double loglik_observed(const PanelData& panel, const BDIParams& params) {
  return loglik_observed(intervals_from_panel(panel), params);
}

MarginalExpectations marginal_expectations(std::int64_t i, double t, const BDIParams& params) {
  validate_params(params);
  if (!(t >= 0.0)) throw error("marginal_expectations: t must be nonnegative");
  MarginalExpectations m;
  if (t == 0.0) return m;
  const double h = 1e-4;
  const double hw = 1e-4 * std::max(1.0, params.lambda + params.mu);
  auto Hval = [&](double u, double v, double w) {
    return eval_H(i, GFPoint{u, v, w, {1.0, 0.0}, t}, params).real();
  };
  // Fourth-order central differences, matching the coefficient-side stencils.
  auto d4 = [](double fm2, double fm1, double fp1, double fp2, double step) {
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * step);
  };
  m.up = d4(Hval(1.0 - 2 * h, 1, 0), Hval(1.0 - h, 1, 0), Hval(1.0 + h, 1, 0),
            Hval(1.0 + 2 * h, 1, 0), h);
  m.down = d4(Hval(1, 1.0 - 2 * h, 0), Hval(1, 1.0 - h, 0), Hval(1, 1.0 + h, 0),
              Hval(1, 1.0 + 2 * h, 0), h);
  m.particle_time = -d4(Hval(1, 1, -2 * hw), Hval(1, 1, -hw), Hval(1, 1, hw),
                        Hval(1, 1, 2 * hw), hw);
  m.up = std::max(0.0, m.up);
  m.down = std::max(0.0, m.down);
  m.particle_time = std::max(0.0, m.particle_time);
  return m;
}

}  // namespace bdi
