#include <doctest.h>

#include <cmath>

#include "bdi/moments.hpp"
#include "bdi/oracle.hpp"
#include "bdi/special.hpp"

using namespace bdi;

namespace {

double binom_pmf(std::int64_t n, std::int64_t k, double p) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (std::int64_t m = 1; m <= k; ++m) c = c * double(n - k + m) / double(m);
  return c * std::pow(p, double(k)) * std::pow(1.0 - p, double(n - k));
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("uniformization rows are stochastic") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  for (double t : {0.3, 2.0, 10.0})
    for (std::int64_t i : {0, 5, 15}) {
      const auto row = oracle::uniformization_row(i, t, p);
      double sum = 0.0;
      for (double v : row) {
        CHECK(v >= -1e-15);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("uniformization reproduces pure-death binomial thinning") {
  const BDIParams p = BDIParams::full(0.0, 0.12, 0.0);
  for (double t : {0.5, 3.0})
    for (std::int64_t i : {1, 6, 12})
      for (std::int64_t j = 0; j <= i; ++j)
        CHECK(std::abs(oracle::uniformization_transition(i, j, t, p) -
                       binom_pmf(i, j, std::exp(-0.12 * t))) < 1e-12);
}

TEST_CASE("uniformization column equals matrix column") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const double t = 1.7;
  const auto col = oracle::uniformization_col(4, t, p);
  for (std::int64_t i : {0, 2, 4, 9})
    CHECK(col[std::size_t(i)] ==
          doctest::Approx(oracle::uniformization_transition(i, 4, t, p)).epsilon(1e-10));
}

TEST_CASE("truncation guard fires when the box is too small") {
  const BDIParams p = BDIParams::full(0.5, 0.01, 1.0);
  oracle::TruncationSpec small{12, 1e-12};
  CHECK_THROWS_AS(oracle::uniformization_row(10, 5.0, p, small), truncation_too_small);
}

TEST_CASE("convolution moments: pure birth has no down jumps") {
  const BDIParams p = BDIParams::full(0.1, 0.0, 0.0);
  const auto m = oracle::convolution_restricted_moments(2, 4, 1.0, p);
  CHECK(m.down == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(m.up > 0.0);
}

TEST_CASE("convolution moments match the death-immigration closed forms") {
  const double mu = 0.12, nu = 0.2;
  const BDIParams p = BDIParams::full(0.0, mu, nu);
  for (std::int64_t i : {0, 2, 4})
    for (std::int64_t j : {0, 1, 3, 5})
      for (double t : {0.5, 1.5}) {
        const auto conv = oracle::convolution_restricted_moments(i, j, t, p);
        const double up = special::dimm_restricted_up(i, j, t, mu, nu);
        const auto dp = special::dimm_restricted_down_and_pt(i, j, t, mu, nu);
        CHECK(std::abs(conv.up - up) < 1e-7);
        CHECK(std::abs(conv.down - dp.down) < 1e-7);
        CHECK(std::abs(conv.particle_time - dp.particle_time) < 1e-7);
      }
}

TEST_CASE("Monte Carlo conditional stats: SE scales as 1/sqrt(n)") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const auto s1 = oracle::mc_conditional_stats(5, 5, 1.0, p, 2000, RngStream(11));
  const auto s4 = oracle::mc_conditional_stats(5, 5, 1.0, p, 8000, RngStream(12));
  const double ratio = s1.up.se / s4.up.se;
  CHECK(ratio > 1.3);
  CHECK(ratio < 3.1);
}

TEST_CASE("Monte Carlo conditional stats agree with the exact conditional expectations") {
  const BDIParams p = BDIParams::full(0.07, 0.12, 0.084);
  const auto mc = oracle::mc_conditional_stats(5, 4, 1.0, p, 20000, RngStream(21));
  const auto ex = conditional_expectations(5, 4, 1.0, p);
  CHECK(std::abs(mc.up.mean - ex.U) < 3.0 * mc.up.se);
  CHECK(std::abs(mc.down.mean - ex.D) < 3.0 * mc.down.se);
  CHECK(std::abs(mc.particle_time.mean - ex.P) < 3.0 * mc.particle_time.se);
}

}  // TEST_SUITE
