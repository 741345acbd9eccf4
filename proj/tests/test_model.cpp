#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bdi/model.hpp"
#include "bdi/panel_io.hpp"
#include "test_util.hpp"

using namespace bdi;

TEST_SUITE("model") {

TEST_CASE("validate_params accepts the simulation-scenario parameters") {
  const BDIParams p = BDIParams::restricted(0.07, 0.12, 1.2);
  CHECK_NOTHROW(validate_params(p));
  CHECK(p.nu == doctest::Approx(0.084));
  CHECK_NOTHROW(validate_params(BDIParams::death_immigration(0.12, 0.2)));
}

TEST_CASE("validate_params rejects invalid inputs") {
  BDIParams bad = BDIParams::full(-0.1, 0.12, 0.0);
  CHECK_THROWS_AS(validate_params(bad), negative_rate);

  BDIParams mismatch = BDIParams::restricted(0.07, 0.12, 1.2);
  mismatch.nu = 0.09;
  CHECK_THROWS_AS(validate_params(mismatch), variant_violation);

  BDIParams di = BDIParams::death_immigration(0.12, 0.2);
  di.lambda = 0.01;
  CHECK_THROWS_AS(validate_params(di), variant_violation);
}

TEST_CASE("sufficient statistics of simple paths") {
  SUBCASE("constant path") {
    Trajectory t{2, {}, 3.0};
    const SufficientStats s = sufficient_stats(t);
    CHECK(s.n_plus == 0);
    CHECK(s.n_minus == 0);
    CHECK(s.particle_time == doctest::Approx(6.0));
    CHECK(s.upjumps_by_state.empty());
  }
  SUBCASE("one up one down") {
    Trajectory t{1, {{1.0, +1}, {2.0, -1}}, 3.0};
    const SufficientStats s = sufficient_stats(t);
    CHECK(s.n_plus == 1);
    CHECK(s.n_minus == 1);
    CHECK(s.particle_time == doctest::Approx(4.0));
    CHECK(s.upjumps_by_state.at(1) == 1);
  }
}

TEST_CASE("trajectory validation catches malformed paths") {
  CHECK_THROWS_AS(validate_trajectory(Trajectory{0, {{1.0, -1}}, 2.0}), invalid_trajectory);
  CHECK_THROWS_AS(validate_trajectory(Trajectory{1, {{1.0, +1}, {0.5, -1}}, 2.0}),
                  invalid_trajectory);
  CHECK_THROWS_AS(validate_trajectory(Trajectory{1, {{2.5, +1}}, 2.0}), invalid_trajectory);
}

TEST_CASE("sufficient stats respect concatenation") {
  RngStream rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    const Trajectory t = testutil::random_trajectory(rng);
    const double cut = 0.3 + 0.4 * rng.u01() * t.horizon;
    Trajectory left{t.initial_state, {}, cut};
    Trajectory right{t.state_at(cut), {}, t.horizon - cut};
    for (const auto& j : t.jumps) {
      if (j.time < cut)
        left.jumps.push_back(j);
      else
        right.jumps.push_back({j.time - cut, j.direction});
    }
    SufficientStats sum = sufficient_stats(left);
    sum += sufficient_stats(right);
    const SufficientStats whole = sufficient_stats(t);
    CHECK(sum.n_plus == whole.n_plus);
    CHECK(sum.n_minus == whole.n_minus);
    CHECK(sum.particle_time == doctest::Approx(whole.particle_time).epsilon(1e-12));
    CHECK(sum.upjumps_by_state == whole.upjumps_by_state);
  }
}

TEST_CASE("complete-data log-likelihood matches the closed forms") {
  RngStream rng(7);
  const double lam = 0.3, mu = 0.4, beta = 1.2;
  const BDIParams restricted = BDIParams::restricted(lam, mu, beta);
  const BDIParams full = BDIParams::full(lam, mu, beta * lam);
  for (int rep = 0; rep < 30; ++rep) {
    const Trajectory t = testutil::random_trajectory(rng);
    const SufficientStats s = sufficient_stats(t);
    const double expected = -s.particle_time * (lam + mu) - t.horizon * beta * lam +
                            (s.n_plus > 0 ? double(s.n_plus) * std::log(lam) : 0.0) +
                            (s.n_minus > 0 ? double(s.n_minus) * std::log(mu) : 0.0);
    CHECK(loglik_complete(t, restricted) == doctest::Approx(expected).epsilon(1e-12));

    // Restricted and full evaluations differ by sum_i n_i log((i lam + nu)/lam).
    double shift = 0.0;
    for (const auto& [state, count] : s.upjumps_by_state)
      shift += double(count) * std::log((double(state) * lam + beta * lam) / lam);
    CHECK(loglik_complete(t, full) ==
          doctest::Approx(loglik_complete(t, restricted) + shift).epsilon(1e-10));
  }
}

TEST_CASE("impossible jumps give -inf, not an exception") {
  Trajectory t{1, {{0.5, +1}, {1.0, -1}}, 2.0};
  CHECK(loglik_complete(t, BDIParams::full(0.1, 0.0, 0.05)) == -inf);
  CHECK(loglik_complete(t, BDIParams::full(0.0, 0.1, 0.0)) == -inf);
}

TEST_CASE("interval extraction from a panel") {
  PanelData panel;
  panel.individuals.push_back({"a", {0.0, 1.0, 3.0}, {2, 3, 3}});
  const auto iv = intervals_from_panel(panel);
  REQUIRE(iv.size() == 2);
  CHECK(iv[0].start_state == 2);
  CHECK(iv[0].end_state == 3);
  CHECK(iv[0].length == doctest::Approx(1.0));
  CHECK(iv[1].start_state == 3);
  CHECK(iv[1].end_state == 3);
  CHECK(iv[1].length == doctest::Approx(2.0));

  PanelData bad;
  bad.individuals.push_back({"x", {0.0}, {1}});
  CHECK_THROWS_AS(intervals_from_panel(bad), invalid_panel);
}

TEST_CASE("interval count equals observations minus individuals") {
  PanelData panel;
  panel.individuals.push_back({"a", {0.0, 1.0, 3.0, 4.5}, {2, 3, 3, 1}});
  panel.individuals.push_back({"b", {0.5, 2.0}, {0, 1}});
  CHECK(intervals_from_panel(panel).size() == 4);
  CHECK(panel.interval_count() == 4);
}

TEST_CASE("panel csv round-trips") {
  PanelData panel;
  panel.individuals.push_back({"a", {0.0, 1.25, 3.0}, {2, 3, 3}});
  panel.individuals.push_back({"b", {0.5, 2.0}, {11, 9}});
  std::ostringstream out;
  write_panel_csv(out, panel);
  std::istringstream in(out.str());
  const PanelData back = read_panel_csv(in);
  REQUIRE(back.individuals.size() == 2);
  CHECK(back.individuals[0].id == "a");
  CHECK(back.individuals[0].times == panel.individuals[0].times);
  CHECK(back.individuals[0].counts == panel.individuals[0].counts);
  CHECK(back.individuals[1].counts == panel.individuals[1].counts);
}

TEST_CASE("panel csv sorts unsorted rows and rejects garbage") {
  std::istringstream in("id,time,count\nx,2.0,5\nx,1.0,7\n");
  const PanelData p = read_panel_csv(in);
  CHECK(p.individuals[0].counts[0] == 7);
  CHECK(p.individuals[0].counts[1] == 5);

  std::istringstream bad("id,time,count\nx,abc,5\n");
  CHECK_THROWS_AS(read_panel_csv(bad), invalid_panel);
  std::istringstream bad_header("a,b\n");
  CHECK_THROWS_AS(read_panel_csv(bad_header), invalid_panel);
}

TEST_CASE("trajectory csv dump includes endpoints") {
  Trajectory t{2, {{0.5, +1}, {1.5, -1}}, 2.0};
  std::ostringstream out;
  write_trajectory_csv(out, t);
  CHECK(out.str() == "time,state\n0,2\n0.5,3\n1.5,2\n2,2\n");
}

}  // TEST_SUITE
