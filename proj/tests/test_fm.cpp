#include <doctest.h>

#include <cmath>

#include "bdi/fm.hpp"
#include "bdi/simstudy.hpp"
#include "bdi/stats_util.hpp"

using namespace bdi;

TEST_SUITE("fm") {

TEST_CASE("interval log-likelihood closed forms") {
  CHECK(fm_interval_loglik(2, 0, 1.0, 0.07, 0.12) == doctest::Approx(-0.38).epsilon(1e-14));
  const double expect = std::log(0.07 / 0.19 * (1.0 - std::exp(-0.38)));
  CHECK(fm_interval_loglik(2, 1, 1.0, 0.07, 0.12) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(fm_interval_loglik(2, 1, 1.0, 0.0, 0.12) == -inf);
  CHECK_THROWS_AS(fm_interval_loglik(0, 1, 1.0, 0.07, 0.12), error);
}

TEST_CASE("interval classification and exclusion counting") {
  std::vector<Interval> iv{{2, 3, 1.0}, {3, 1, 1.0}, {0, 0, 1.0}, {4, 4, 2.0}, {1, 0, 0.5}};
  const FMData d = fm_data_from_intervals(iv);
  CHECK(d.usable.size() == 3);
  CHECK(d.excluded_multistep == 1);
  CHECK(d.excluded_zero_start == 1);

  const FMData keep = fm_data_from_intervals(iv, true);
  CHECK(keep.usable.size() == 4);
  CHECK(keep.excluded_zero_start == 0);
}

TEST_CASE("no observed changes gives the boundary fit") {
  std::vector<Interval> iv{{3, 3, 1.0}, {5, 5, 0.5}};
  const FMFit fit = fm_fit(iv);
  CHECK(fit.lambda == 0.0);
  CHECK(fit.mu == 0.0);
  CHECK(fit.boundary);
}

TEST_CASE("fit maximizes the FM objective (grid-search oracle)") {
  study::GridProtocol proto;
  proto.individuals = 12;
  proto.dt = 0.4;
  proto.horizon = 6.0;
  const PanelData panel = study::simulate_grid(
      BDIParams::restricted(0.07, 0.12, 0.0), proto, RngStream(5));
  const auto iv = intervals_from_panel(panel);
  const FMFit fit = fm_fit(iv);
  REQUIRE(!fit.boundary);

  const FMData data = fm_data_from_intervals(iv);
  double best_l = 0.0, best_m = 0.0, best = -1e30;
  for (int a = 1; a <= 300; ++a)
    for (int b = 1; b <= 300; ++b) {
      const double lam = 0.3 * double(a) / 300.0;
      const double mu = 0.4 * double(b) / 300.0;
      const double v = fm_loglik(data, lam, mu);
      if (v > best) {
        best = v;
        best_l = lam;
        best_m = mu;
      }
    }
  double lo_l = std::max(1e-6, best_l - 0.002), hi_l = best_l + 0.002;
  double lo_m = std::max(1e-6, best_m - 0.002), hi_m = best_m + 0.002;
  for (int a = 0; a <= 400; ++a)
    for (int b = 0; b <= 400; ++b) {
      const double lam = lo_l + (hi_l - lo_l) * double(a) / 400.0;
      const double mu = lo_m + (hi_m - lo_m) * double(b) / 400.0;
      const double v = fm_loglik(data, lam, mu);
      if (v > best) {
        best = v;
        best_l = lam;
        best_m = mu;
      }
    }
  CHECK(std::abs(fit.lambda - best_l) < 1e-5);
  CHECK(std::abs(fit.mu - best_m) < 1e-5);
}

TEST_CASE("FM underestimates at coarse observation spacing") {
  // Median FM estimates across replicates sit below truth at dt = 0.6; this is
  // the small-scale version of the comparison study.
  const double truth_l = 0.07, truth_m = 0.12;
  std::vector<double> lams, mus;
  for (int rep = 0; rep < 30; ++rep) {
    study::GridProtocol proto;
    proto.individuals = 30;
    proto.dt = 0.6;
    proto.horizon = 9.0;
    proto.init_low = 8;
    proto.init_high = 20;
    const PanelData panel = study::simulate_grid(
        BDIParams::restricted(truth_l, truth_m, 0.0), proto, RngStream(100 + rep));
    try {
      const FMFit fit = fm_fit(intervals_from_panel(panel));
      lams.push_back(fit.lambda);
      mus.push_back(fit.mu);
    } catch (const all_intervals_excluded&) {
    }
  }
  REQUIRE(lams.size() >= 25);
  CHECK(median(lams) < truth_l);
  CHECK(median(mus) < truth_m);
}

}  // TEST_SUITE
