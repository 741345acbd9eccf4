#include <doctest.h>

#include <cmath>
#include <map>

#include "bdi/genfun.hpp"
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

TEST_SUITE("sampler") {

TEST_CASE("all-zero rates give a constant path") {
  RngStream rng(1);
  const auto t = simulate_forward(5, 3.0, BDIParams::full(0.0, 0.0, 0.0), rng);
  CHECK(t.jumps.empty());
  CHECK(t.final_state() == 5);
}

TEST_CASE("identical streams reproduce identical trajectories") {
  const BDIParams p = BDIParams::full(0.3, 0.4, 0.2);
  RngStream a = RngStream(9).child(3, 7);
  RngStream b = RngStream(9).child(3, 7);
  const auto ta = simulate_forward(4, 5.0, p, a);
  const auto tb = simulate_forward(4, 5.0, p, b);
  REQUIRE(ta.jumps.size() == tb.jumps.size());
  for (std::size_t k = 0; k < ta.jumps.size(); ++k) {
    CHECK(ta.jumps[k].time == tb.jumps[k].time);
    CHECK(ta.jumps[k].direction == tb.jumps[k].direction);
  }
}

TEST_CASE("pure-death terminal states are binomial") {
  const BDIParams p = BDIParams::full(0.0, 0.12, 0.0);
  const std::int64_t i0 = 10;
  const double T = 2.0;
  const std::int64_t n = 100000;
  std::vector<double> observed(std::size_t(i0) + 1, 0.0);
  RngStream rng(17);
  for (std::int64_t k = 0; k < n; ++k) {
    RngStream prng = rng.child(std::uint64_t(k));
    const auto t = simulate_forward(i0, T, p, prng);
    observed[std::size_t(t.final_state())] += 1.0;
  }
  std::vector<double> expected(std::size_t(i0) + 1, 0.0);
  for (std::int64_t j = 0; j <= i0; ++j)
    expected[std::size_t(j)] = double(n) * binom_pmf(i0, j, std::exp(-0.12 * T));
  CHECK(chisq_gof_pvalue(observed, expected) > 0.001);
}

TEST_CASE("empirical endpoint frequencies match transition probabilities") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const std::int64_t i0 = 5;
  const double T = 1.5;
  const std::int64_t n = 200000;
  std::map<std::int64_t, std::int64_t> freq;
  RngStream rng(23);
  for (std::int64_t k = 0; k < n; ++k) {
    RngStream prng = rng.child(std::uint64_t(k));
    ++freq[simulate_forward(i0, T, p, prng).final_state()];
  }
  for (std::int64_t j : {3, 4, 5, 6, 7}) {
    const double prob = transition_prob(i0, j, T, p);
    const double phat = double(freq[j]) / double(n);
    const double se = std::sqrt(prob * (1.0 - prob) / double(n));
    CHECK(std::abs(phat - prob) < 3.0 * se);
  }
}

TEST_CASE("jump law satisfies the first-event total-probability identity") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  SUBCASE("equal endpoints") {
    ConditionedSampler s(4, 4, 1.5, p);
    const JumpLaw law = s.compute_jump_law(4, 1.5);
    const double lam4 = 4.0 * (0.07 + 0.12) + 0.084;
    CHECK(law.p_stay ==
          doctest::Approx(std::exp(-lam4 * 1.5) / transition_prob(4, 4, 1.5, p)).epsilon(1e-8));
    CHECK(std::abs(law.p_stay + law.p_up + law.p_down - 1.0) < 1e-8);
  }
  SUBCASE("unequal endpoints force a jump") {
    ConditionedSampler s(5, 3, 1.0, p);
    const JumpLaw law = s.compute_jump_law(5, 1.0);
    CHECK(law.p_stay == 0.0);
    CHECK(std::abs(law.p_up + law.p_down - 1.0) < 1e-8);
  }
}

TEST_CASE("first-jump direction probabilities match rejection frequencies") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  ConditionedSampler s(2, 3, 1.0, p);
  const JumpLaw law = s.compute_jump_law(2, 1.0);
  const std::int64_t n = 30000;
  std::int64_t up = 0, down = 0;
  RngStream rng(31);
  std::int64_t k = 0;
  std::int64_t accepted = 0;
  while (accepted < n) {
    RngStream prng = rng.child(std::uint64_t(k++));
    const auto t = simulate_forward(2, 1.0, p, prng);
    if (t.final_state() != 3) continue;
    ++accepted;
    REQUIRE(!t.jumps.empty());
    if (t.jumps.front().direction == 1)
      ++up;
    else
      ++down;
  }
  const double phat_up = double(up) / double(n);
  const double se = std::sqrt(law.p_up * (1.0 - law.p_up) / double(n));
  CHECK(std::abs(phat_up - law.p_up) < 3.0 * se);
  CHECK(down + up == n);
}

TEST_CASE("direct sampler hits the endpoint exactly and respects short horizons") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  SUBCASE("tiny horizon stays put") {
    ConditionedSampler s(3, 3, 1e-6, p);
    std::int64_t empty = 0;
    const std::int64_t n = 10000;
    for (std::int64_t k = 0; k < n; ++k) {
      RngStream rng = RngStream(47).child(std::uint64_t(k));
      const auto t = s.sample_direct(rng);
      CHECK(t.final_state() == 3);
      if (t.jumps.empty()) ++empty;
    }
    CHECK(double(empty) / double(n) >= 0.999);
  }
  SUBCASE("terminal state always exact") {
    ConditionedSampler s(5, 2, 2.0, p);
    for (std::int64_t k = 0; k < 2000; ++k) {
      RngStream rng = RngStream(53).child(std::uint64_t(k));
      const auto t = s.sample_direct(rng);
      CHECK(t.final_state() == 2);
      CHECK_NOTHROW(validate_trajectory(t));
    }
  }
}

TEST_CASE("direct sampler midpoint law obeys Chapman-Kolmogorov") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const std::int64_t a = 4, b = 5;
  const double T = 2.0;
  ConditionedSampler s(a, b, T, p);
  const std::int64_t n = 50000;
  std::map<std::int64_t, std::int64_t> freq;
  for (std::int64_t k = 0; k < n; ++k) {
    RngStream rng = RngStream(61).child(std::uint64_t(k));
    const auto t = s.sample_direct(rng);
    ++freq[t.state_at(T / 2.0)];
  }
  const double pab = transition_prob(a, b, T, p);
  std::vector<double> observed, expected;
  for (std::int64_t mid = 0; mid <= 14; ++mid) {
    observed.push_back(double(freq[mid]));
    expected.push_back(double(n) * transition_prob(a, mid, T / 2.0, p) *
                       transition_prob(mid, b, T / 2.0, p) / pab);
  }
  CHECK(chisq_gof_pvalue(observed, expected) > 0.001);
}

TEST_CASE("direct and rejection samplers draw the same up-jump law") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const std::int64_t a = 5, b = 4;
  const double T = 1.5;
  ConditionedSampler s(a, b, T, p);
  const std::int64_t n = 20000;
  std::vector<std::int64_t> dir_hist(24, 0), rej_hist(24, 0);
  for (std::int64_t k = 0; k < n; ++k) {
    RngStream r1 = RngStream(71).child(std::uint64_t(k));
    RngStream r2 = RngStream(72).child(std::uint64_t(k));
    const auto td = s.sample_direct(r1);
    const auto tr = s.sample_rejection(r2, 1000000);
    const auto sd = sufficient_stats(td);
    const auto sr = sufficient_stats(tr);
    ++dir_hist[std::size_t(std::min<std::int64_t>(sd.n_plus, 23))];
    ++rej_hist[std::size_t(std::min<std::int64_t>(sr.n_plus, 23))];
  }
  CHECK(chisq_two_sample_pvalue(dir_hist, rej_hist) > 0.001);
}

TEST_CASE("strategy switch picks rejection for likely endpoints, direct for rare ones") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  ConditionedSampler likely(5, 5, 1.0, p);
  CHECK(likely.endpoint_prob() > 0.05);
  CHECK(likely.chosen_strategy() == Strategy::Rejection);

  ConditionedSampler rare(2, 7, 1.0, p);
  CHECK(rare.endpoint_prob() < 1e-3);
  CHECK(rare.chosen_strategy() == Strategy::Direct);

  // Law invariance across forced strategies.
  SamplerOptions force_direct;
  force_direct.strategy = Strategy::Direct;
  ConditionedSampler sd(5, 5, 1.0, p, force_direct);
  SamplerOptions force_rej;
  force_rej.strategy = Strategy::Rejection;
  ConditionedSampler sr(5, 5, 1.0, p, force_rej);
  const std::int64_t n = 20000;
  double sum_d = 0.0, sum_r = 0.0, sq_d = 0.0, sq_r = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    RngStream r1 = RngStream(81).child(std::uint64_t(k));
    RngStream r2 = RngStream(82).child(std::uint64_t(k));
    const double vd = double(sufficient_stats(sd.sample(r1)).n_plus);
    const double vr = double(sufficient_stats(sr.sample(r2)).n_plus);
    sum_d += vd;
    sq_d += vd * vd;
    sum_r += vr;
    sq_r += vr * vr;
  }
  const double md = sum_d / double(n), mr = sum_r / double(n);
  const double vard = (sq_d / double(n) - md * md) / double(n);
  const double varr = (sq_r / double(n) - mr * mr) / double(n);
  CHECK(std::abs(md - mr) < 3.0 * std::sqrt(vard + varr));
}

TEST_CASE("rejection sampling with an absurd budget fails loudly") {
  const BDIParams p = BDIParams::full(2.0, 3.0, 1.0);
  ConditionedSampler s(3, 3, 4.0, p);
  RngStream rng(91);
  CHECK_THROWS_AS(s.sample_rejection(rng, 1), max_tries_exceeded);
}

TEST_CASE("improbable endpoints are rejected up front") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  CHECK_THROWS_AS(ConditionedSampler(0, 30, 0.05, p), improbable_endpoint);
}

}  // TEST_SUITE
