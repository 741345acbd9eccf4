#include <doctest.h>

#include <cmath>
#include <complex>

#include "bdi/genfun.hpp"
#include "bdi/oracle.hpp"
#include "bdi/sampler.hpp"
#include "bdi/stats_util.hpp"

using namespace bdi;

namespace {

double binom_pmf(std::int64_t n, std::int64_t k, double p) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (std::int64_t m = 1; m <= k; ++m) c = c * double(n - k + m) / double(m);
  return c * std::pow(p, double(k)) * std::pow(1.0 - p, double(n - k));
}

}  // namespace

TEST_SUITE("genfun") {

TEST_CASE("H reduces to s^i at t = 0") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const std::complex<double> s{0.4, 0.3};
  const auto H = eval_H(3, GFPoint{0.9, 1.0, 0.1, s, 0.0}, p);
  CHECK(std::abs(H - s * s * s) < 1e-14);
}

TEST_CASE("total probability: H(1,1,0,1,t) = 1") {
  for (double lam : {0.0, 0.05, 0.25})
    for (double mu : {0.04, 0.3})
      for (double nu : {0.0, 0.4})
        for (double t : {0.1, 1.0, 10.0}) {
          const BDIParams p = BDIParams::full(lam, mu, nu);
          for (std::int64_t i : {0, 1, 7}) {
            const auto H = eval_H(i, GFPoint{1.0, 1.0, 0.0, {1.0, 0.0}, t}, p);
            CHECK(std::abs(H - std::complex<double>{1.0, 0.0}) < 1e-12);
          }
        }
}

TEST_CASE("lambda = 0 closed form is the continuity limit of the general branch") {
  const GFPoint pt{1.0, 1.0, 0.0, {0.5, 0.0}, 2.0};
  const auto exact = eval_H(3, pt, BDIParams::full(0.0, 0.12, 0.2));
  const auto limit = eval_H(3, pt, BDIParams::full(1e-8, 0.12, 0.2));
  CHECK(std::abs(exact - limit) < 1e-6);
}

TEST_CASE("Vieta identities hold for the roots") {
  for (double u : {0.95, 1.0, 1.05})
    for (double v : {0.95, 1.0})
      for (double w : {0.0, 0.01}) {
        const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
        const Alphas a = compute_alphas(u, v, w, p);
        const auto prod = a.alpha1 * a.alpha2;
        const auto sum = a.alpha1 + a.alpha2;
        CHECK(std::abs(prod - v * p.mu / (u * p.lambda)) < 1e-10 * std::abs(prod));
        CHECK(std::abs(sum - (p.lambda + p.mu + w) / (u * p.lambda)) < 1e-10 * std::abs(sum));
      }
}

TEST_CASE("closed form satisfies the transport PDE") {
  // Central-difference residual of
  //   dH/dt = [s^2 u lam - (lam+mu+w) s + v mu] dH/ds + nu (u s - 1) H.
  for (const BDIParams& p :
       {BDIParams::full(0.07, 0.12, 0.084), BDIParams::full(0.3, 0.1, 0.0),
        BDIParams::full(0.0, 0.2, 0.15)}) {
    for (double u : {0.9, 1.0})
      for (double v : {0.9, 1.0})
        for (double w : {0.0, 0.05})
          for (double sr : {0.3, 0.7})
            for (double t : {0.5, 2.0}) {
              const double ht = 1e-5, hs = 1e-5;
              auto H = [&](double tt, double ss) {
                return eval_H(4, GFPoint{u, v, w, {ss, 0.0}, tt}, p).real();
              };
              const double dt = (H(t + ht, sr) - H(t - ht, sr)) / (2.0 * ht);
              const double ds = (H(t, sr + hs) - H(t, sr - hs)) / (2.0 * hs);
              const double rhs =
                  (sr * sr * u * p.lambda - (p.lambda + p.mu + w) * sr + v * p.mu) * ds +
                  p.nu * (u * sr - 1.0) * H(t, sr);
              CHECK(std::abs(dt - rhs) < 1e-5 * std::max(1.0, std::abs(dt)));
            }
  }
}

TEST_CASE("transition probabilities: identity at t = 0") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  CHECK(transition_prob(3, 3, 0.0, p) == 1.0);
  CHECK(transition_prob(3, 2, 0.0, p) == 0.0);
}

TEST_CASE("pure death transition probabilities are binomial thinning") {
  const BDIParams p = BDIParams::full(0.0, 0.12, 0.0);
  for (double t : {0.5, 2.0})
    for (std::int64_t i : {1, 4, 9})
      for (std::int64_t j = 0; j <= i; ++j) {
        const double expect = binom_pmf(i, j, std::exp(-0.12 * t));
        CHECK(std::abs(transition_prob(i, j, t, p) - expect) < 1e-10);
      }
}

TEST_CASE("transition probabilities match the uniformization oracle") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  for (double t : {0.5, 5.0})
    for (std::int64_t i : {0, 3, 9}) {
      const auto row = oracle::uniformization_row(i, t, p);
      for (std::int64_t j : {0, 1, 4, 8, 12})
        CHECK(std::abs(transition_prob(i, j, t, p) - row[std::size_t(j)]) < 1e-8);
    }
}

TEST_CASE("coincident roots (lambda = mu) are handled by the w-shift") {
  const BDIParams p = BDIParams::full(0.1, 0.1, 0.05);
  CHECK_THROWS_AS(eval_H(2, GFPoint{1.0, 1.0, 0.0, {0.5, 0.0}, 1.0}, p), branch_degenerate);
  // The coefficient layer substitutes the Richardson pair automatically.
  for (std::int64_t j : {1, 2, 3}) {
    const double got = transition_prob(2, j, 1.0, p);
    const double want = oracle::uniformization_transition(2, j, 1.0, p);
    CHECK(std::abs(got - want) < 1e-7);
  }
}

TEST_CASE("row sums reach one under coefficient-count doubling") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const std::int64_t i = 6;
  const double t = 2.0;
  double sum = 0.0;
  std::int64_t J = 16;
  for (std::int64_t j = 0; j <= J; ++j) sum += transition_prob(i, j, t, p);
  while (std::abs(sum - 1.0) > 1e-8 && J < 512) {
    const std::int64_t J2 = 2 * J;
    for (std::int64_t j = J + 1; j <= J2; ++j) sum += transition_prob(i, j, t, p);
    J = J2;
  }
  CHECK(std::abs(sum - 1.0) < 1e-8);
}

TEST_CASE("observed log-likelihood short-time and oracle checks") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  SUBCASE("near-zero interval gives near-zero log-likelihood") {
    std::vector<Interval> iv{{2, 2, 1e-8}};
    CHECK(std::abs(loglik_observed(iv, p)) < 1e-6);
  }
  SUBCASE("matches summed uniformization log-probabilities") {
    std::vector<Interval> iv{{2, 3, 0.7}, {3, 3, 1.2}, {3, 1, 2.0}, {1, 0, 0.4},
                             {0, 1, 3.0}, {1, 2, 1.5}, {2, 2, 0.9}, {2, 4, 2.5},
                             {4, 4, 0.3}, {4, 2, 1.8}};
    double expect = 0.0;
    for (const auto& intervl : iv)
      expect += std::log(
          oracle::uniformization_transition(intervl.start_state, intervl.end_state,
                                            intervl.length, p));
    CHECK(loglik_observed(iv, p) == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("marginal expectations") {
  SUBCASE("zero at t = 0") {
    const auto m = marginal_expectations(5, 0.0, BDIParams::full(0.07, 0.12, 0.084));
    CHECK(m.up == 0.0);
    CHECK(m.down == 0.0);
    CHECK(m.particle_time == 0.0);
  }
  SUBCASE("pure immigration gives Poisson arrivals") {
    const double nu = 0.3, t = 2.0;
    const auto m = marginal_expectations(0, t, BDIParams::full(0.0, 0.0, nu));
    CHECK(m.up == doctest::Approx(nu * t).epsilon(1e-7));
    CHECK(m.down == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(m.particle_time == doctest::Approx(nu * t * t / 2.0).epsilon(1e-6));
  }
  SUBCASE("matches forward-simulation means") {
    const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
    const std::int64_t i0 = 10;
    const double t = 2.0;
    const auto m = marginal_expectations(i0, t, p);
    RngStream rng(99);
    const std::int64_t n = 200000;
    double su = 0, sd = 0, sr = 0, su2 = 0, sd2 = 0, sr2 = 0;
    for (std::int64_t k = 0; k < n; ++k) {
      RngStream prng = rng.child(std::uint64_t(k));
      const auto traj = simulate_forward(i0, t, p, prng);
      const auto st = sufficient_stats(traj);
      su += double(st.n_plus);
      sd += double(st.n_minus);
      sr += st.particle_time;
      su2 += double(st.n_plus) * double(st.n_plus);
      sd2 += double(st.n_minus) * double(st.n_minus);
      sr2 += st.particle_time * st.particle_time;
    }
    auto mean_se = [n](double s, double s2) {
      const double mean = s / double(n);
      const double var = (s2 / double(n) - mean * mean) * double(n) / double(n - 1);
      return std::pair<double, double>(mean, std::sqrt(var / double(n)));
    };
    const auto [mu_u, se_u] = mean_se(su, su2);
    const auto [mu_d, se_d] = mean_se(sd, sd2);
    const auto [mu_r, se_r] = mean_se(sr, sr2);
    CHECK(std::abs(m.up - mu_u) < 3.0 * se_u);
    CHECK(std::abs(m.down - mu_d) < 3.0 * se_d);
    CHECK(std::abs(m.particle_time - mu_r) < 3.0 * se_r);
  }
}

TEST_CASE("transition cache returns consistent values") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const double a = transition_prob(5, 4, 1.0, p);
  const double b = transition_prob(5, 4, 1.0, p);
  CHECK(a == b);
  clear_transition_cache();
  CHECK(transition_prob(5, 4, 1.0, p) == doctest::Approx(a).epsilon(1e-15));
}

}  // TEST_SUITE
