#include "bdi/louis.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "bdi/moments.hpp"
#include "bdi/sampler.hpp"
#include "bdi/stats_util.hpp"

namespace bdi {

namespace {

constexpr double kInteriorTol = 1e-12;

struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;
};

InfoMatrix assemble2(const char* n1, const char* n2, const Mat2& hess, const Mat2& score_sq,
                     double s1, double s2) {
  // I = E[-l''] - E[l' l'^T]; the score outer product across intervals expands
  // to per-interval covariances plus the total-mean outer product.
  InfoMatrix info;
  info.param_names = {n1, n2};
  info.entries = {{hess.a11 - score_sq.a11 - s1 * s1, hess.a12 - score_sq.a12 - s1 * s2},
                  {hess.a12 - score_sq.a12 - s1 * s2, hess.a22 - score_sq.a22 - s2 * s2}};
  return info;
}

}  // namespace

InfoMatrix louis_information_restricted(const std::vector<Interval>& intervals,
                                        const BDIParams& mle) {
  validate_params(mle);
  if (mle.variant != Variant::RestrictedImmigration)
    throw error("louis_information_restricted: wrong variant");
  if (mle.lambda <= kInteriorTol || mle.mu <= kInteriorTol)
    throw boundary_mle("louis_information_restricted: MLE on the boundary");
  const double lam = mle.lambda, mu = mle.mu, beta = mle.beta;

  const auto moments = panel_interval_moments(intervals, mle);
  Mat2 hess, cov;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const IntervalMoments& m = moments[k];
    const double bt = beta * intervals[k].length;
    hess.a11 += m.U / (lam * lam);
    hess.a22 += m.D / (mu * mu);

    const double A = m.pt_sq + 2.0 * bt * m.P - 2.0 * m.up_pt / lam - 2.0 * bt * m.U / lam +
                     m.up_sq / (lam * lam) + bt * bt;
    const double B = m.pt_sq + bt * m.P - m.up_pt / lam - m.down_pt / mu - bt * m.D / mu +
                     m.up_down / (lam * mu);
    const double C = m.pt_sq - 2.0 * m.down_pt / mu + m.down_sq / (mu * mu);

    const double g1 = -m.P - bt + m.U / lam;
    const double g2 = -m.P + m.D / mu;
    cov.a11 += A - g1 * g1;
    cov.a12 += B - g1 * g2;
    cov.a22 += C - g2 * g2;
    s1 += g1;
    s2 += g2;
  }
  return assemble2("lambda", "mu", hess, cov, s1, s2);
}

InfoMatrix louis_information_death_imm(const std::vector<Interval>& intervals,
                                       const BDIParams& mle) {
  validate_params(mle);
  if (mle.variant != Variant::DeathImmigration)
    throw error("louis_information_death_imm: wrong variant");
  if (mle.mu <= kInteriorTol || mle.nu <= kInteriorTol)
    throw boundary_mle("louis_information_death_imm: MLE on the boundary");
  const double mu = mle.mu, nu = mle.nu;

  const auto moments = panel_interval_moments(intervals, mle);
  Mat2 hess, cov;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const IntervalMoments& m = moments[k];
    const double tk = intervals[k].length;
    hess.a11 += m.D / (mu * mu);
    hess.a22 += m.U / (nu * nu);

    const double A = m.pt_sq - 2.0 * m.down_pt / mu + m.down_sq / (mu * mu);
    const double B = tk * m.P - m.up_pt / nu - tk * m.D / mu + m.up_down / (mu * nu);
    const double C = tk * tk - 2.0 * tk * m.U / nu + m.up_sq / (nu * nu);

    const double g1 = -m.P + m.D / mu;
    const double g2 = -tk + m.U / nu;
    cov.a11 += A - g1 * g1;
    cov.a12 += B - g1 * g2;
    cov.a22 += C - g2 * g2;
    s1 += g1;
    s2 += g2;
  }
  return assemble2("mu", "nu", hess, cov, s1, s2);
}

namespace {

struct PathTerms {
  double score[3] = {0.0, 0.0, 0.0};
  double neg_hess[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};  // packed upper triangle
};

PathTerms full_model_terms(const SufficientStats& s, double horizon, const BDIParams& p) {
  PathTerms t;
  double sum_i = 0.0, sum_1 = 0.0, sum_ii = 0.0, sum_i1 = 0.0, sum_11 = 0.0;
  for (const auto& [state, count] : s.upjumps_by_state) {
    const double rate = double(state) * p.lambda + p.nu;
    const double c = double(count);
    sum_i += double(state) * c / rate;
    sum_1 += c / rate;
    sum_ii += double(state) * double(state) * c / (rate * rate);
    sum_i1 += double(state) * c / (rate * rate);
    sum_11 += c / (rate * rate);
  }
  t.score[0] = -s.particle_time + sum_i;
  t.score[1] = -s.particle_time + double(s.n_minus) / p.mu;
  t.score[2] = -horizon + sum_1;
  // -Hessian, packed (ll, lm, ln, mm, mn, nn)
  t.neg_hess[0] = sum_ii;
  t.neg_hess[1] = 0.0;
  t.neg_hess[2] = sum_i1;
  t.neg_hess[3] = double(s.n_minus) / (p.mu * p.mu);
  t.neg_hess[4] = 0.0;
  t.neg_hess[5] = sum_11;
  return t;
}

}  // namespace

InfoMatrix louis_information_full_mc(const std::vector<Interval>& intervals,
                                     const BDIParams& mle, std::int64_t n_paths,
                                     RngStream rng) {
  validate_params(mle);
  if (n_paths < 100) throw error("louis_information_full_mc: need n_paths >= 100");
  const std::size_t B = 10;  // batches for Monte Carlo SEs

  struct IntervalAccum {
    // per batch: sum of scores, score outer products, neg Hessians, count
    std::vector<std::array<double, 3>> sc;
    std::vector<std::array<double, 6>> outer;
    std::vector<std::array<double, 6>> nh;
    std::vector<std::int64_t> n;
  };
  std::vector<IntervalAccum> acc(intervals.size());

  parallel_for(intervals.size(), [&](std::size_t k) {
    const Interval& iv = intervals[k];
    ConditionedSampler sampler(iv.start_state, iv.end_state, iv.length, mle);
    IntervalAccum& a = acc[k];
    a.sc.assign(B, {0.0, 0.0, 0.0});
    a.outer.assign(B, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    a.nh.assign(B, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    a.n.assign(B, 0);
    for (std::int64_t path = 0; path < n_paths; ++path) {
      RngStream prng = rng.child(0x1015ull + k, std::uint64_t(path));
      const Trajectory traj = sampler.sample(prng);
      const SufficientStats s = sufficient_stats(traj);
      const PathTerms t = full_model_terms(s, iv.length, mle);
      const std::size_t b = std::size_t(path) % B;
      for (int c = 0; c < 3; ++c) a.sc[b][std::size_t(c)] += t.score[c];
      const double outer6[6] = {t.score[0] * t.score[0], t.score[0] * t.score[1],
                                t.score[0] * t.score[2], t.score[1] * t.score[1],
                                t.score[1] * t.score[2], t.score[2] * t.score[2]};
      for (int c = 0; c < 6; ++c) {
        a.outer[b][std::size_t(c)] += outer6[c];
        a.nh[b][std::size_t(c)] += t.neg_hess[c];
      }
      ++a.n[b];
    }
  });

  // Assemble a full-information estimate from one batch selection, then the
  // overall estimate from all paths pooled.
  auto assemble = [&](int batch) {  // batch < 0: pool all
    double S[3] = {0.0, 0.0, 0.0};
    double H[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    double Cov[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    for (const auto& a : acc) {
      double sc[3] = {0.0, 0.0, 0.0}, outer[6] = {0}, nh[6] = {0};
      double n = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        if (batch >= 0 && b != std::size_t(batch)) continue;
        for (int c = 0; c < 3; ++c) sc[c] += a.sc[b][std::size_t(c)];
        for (int c = 0; c < 6; ++c) {
          outer[c] += a.outer[b][std::size_t(c)];
          nh[c] += a.nh[b][std::size_t(c)];
        }
        n += double(a.n[b]);
      }
      for (int c = 0; c < 3; ++c) sc[c] /= n;
      for (int c = 0; c < 6; ++c) {
        outer[c] /= n;
        nh[c] /= n;
      }
      const double mean_outer[6] = {sc[0] * sc[0], sc[0] * sc[1], sc[0] * sc[2],
                                    sc[1] * sc[1], sc[1] * sc[2], sc[2] * sc[2]};
      for (int c = 0; c < 6; ++c) {
        H[c] += nh[c];
        Cov[c] += outer[c] - mean_outer[c];
      }
      for (int c = 0; c < 3; ++c) S[c] += sc[c];
    }
    std::array<double, 6> I{};
    const double SS[6] = {S[0] * S[0], S[0] * S[1], S[0] * S[2],
                          S[1] * S[1], S[1] * S[2], S[2] * S[2]};
    for (int c = 0; c < 6; ++c) I[std::size_t(c)] = H[c] - Cov[c] - SS[c];
    return I;
  };

  const auto pooled = assemble(-1);
  std::vector<std::array<double, 6>> per_batch(B);
  for (std::size_t b = 0; b < B; ++b) per_batch[b] = assemble(int(b));
  std::array<double, 6> se{};
  for (int c = 0; c < 6; ++c) {
    std::vector<double> vals(B);
    for (std::size_t b = 0; b < B; ++b) vals[b] = per_batch[b][std::size_t(c)];
    const MeanVar mv = mean_var(vals);
    se[std::size_t(c)] = mv.se();
  }

  InfoMatrix info;
  info.param_names = {"lambda", "mu", "nu"};
  auto unpack = [](const std::array<double, 6>& p) {
    return std::vector<std::vector<double>>{
        {p[0], p[1], p[2]}, {p[1], p[3], p[4]}, {p[2], p[4], p[5]}};
  };
  info.entries = unpack(pooled);
  info.mc_se = unpack(se);
  return info;
}

std::vector<std::vector<double>> invert_info(const InfoMatrix& info) {
  const std::size_t d = info.dim();
  if (d == 0) throw singular_information("empty information matrix");
  std::vector<std::vector<double>> a = info.entries;
  std::vector<std::vector<double>> inv(d, std::vector<double>(d, 0.0));
  for (std::size_t k = 0; k < d; ++k) inv[k][k] = 1.0;
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (!(std::abs(a[piv][col]) > 1e-300))
      throw singular_information("information matrix is singular");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double scale = a[col][col];
    for (std::size_t c = 0; c < d; ++c) {
      a[col][c] /= scale;
      inv[col][c] /= scale;
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

std::vector<WaldInterval> wald_ci(const std::vector<double>& mle, const InfoMatrix& info,
                                  double level, bool log_scale) {
  if (mle.size() != info.dim()) throw error("wald_ci: dimension mismatch");
  if (!(level > 0.0 && level < 1.0)) throw error("wald_ci: level outside (0,1)");
  const auto inv = invert_info(info);
  const double z = norm_quantile(0.5 * (1.0 + level));
  std::vector<WaldInterval> out(mle.size());
  for (std::size_t k = 0; k < mle.size(); ++k) {
    const double var = inv[k][k];
    if (!(var >= 0.0) || !std::isfinite(var))
      throw singular_information("negative or non-finite variance from information inverse");
    const double sd = std::sqrt(var);
    if (log_scale && mle[k] > 0.0) {
      const double f = std::exp(z * sd / mle[k]);
      out[k] = {mle[k] / f, mle[k] * f};
    } else {
      out[k] = {std::max(0.0, mle[k] - z * sd), mle[k] + z * sd};
    }
  }
  return out;
}

}  // namespace bdi
