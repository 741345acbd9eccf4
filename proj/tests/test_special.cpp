#include <doctest.h>

#include <cmath>

#include "bdi/moments.hpp"
#include "bdi/oracle.hpp"
#include "bdi/special.hpp"

using namespace bdi;
using namespace bdi::special;

namespace {

// Finite-difference generating-function route for the TKF reductions.
TKFMoments tkf_fd_route(const TKFCase& c) {
  const double nu = c.variant == TKFVariant::StartZeroNuEqualsLambda ? c.lambda : 0.0;
  const std::int64_t i0 = c.variant == TKFVariant::StartZeroNuEqualsLambda ? 0 : 1;
  const BDIParams p = BDIParams::full(c.lambda, c.mu, nu);
  TKFMoments m;
  m.up = restricted_moment(MomentKind::Up, i0, c.j, c.t, p);
  m.down = restricted_moment(MomentKind::Down, i0, c.j, c.t, p);
  m.particle_time = restricted_moment(MomentKind::ParticleTime, i0, c.j, c.t, p);
  return m;
}

}  // namespace

TEST_SUITE("special") {

TEST_CASE("death-immigration up moment vanishes without immigration") {
  for (std::int64_t i : {0, 2, 5})
    for (std::int64_t j : {0, 1, 4})
      CHECK(dimm_restricted_up(i, j, 1.0, 0.12, 0.0) == 0.0);
}

TEST_CASE("death-immigration closed forms match the finite-difference route") {
  // This cross-check is the module's purpose; the same grid appears in the
  // moments suite from the other side.
  const double mu = 0.12, nu = 0.2;
  const BDIParams p = BDIParams::full(0.0, mu, nu);
  for (std::int64_t i : {0, 3, 6})
    for (std::int64_t j : {0, 2, 6, 8})
      for (double t : {0.5, 2.0}) {
        CHECK(std::abs(dimm_restricted_up(i, j, t, mu, nu) -
                       restricted_moment(MomentKind::Up, i, j, t, p)) < 1e-8);
        const auto dp = dimm_restricted_down_and_pt(i, j, t, mu, nu);
        CHECK(std::abs(dp.down - restricted_moment(MomentKind::Down, i, j, t, p)) < 1e-8);
        CHECK(std::abs(dp.particle_time -
                       restricted_moment(MomentKind::ParticleTime, i, j, t, p)) < 1e-8);
      }
}

TEST_CASE("death-immigration: no recoverable death when ending where you started") {
  // nu = 0 and j = i: any death is unrecoverable with lambda = 0.
  const auto dp = dimm_restricted_down_and_pt(4, 4, 1.0, 0.12, 0.0);
  CHECK(dp.down == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("death-immigration moments agree with conditioned Monte Carlo") {
  const double mu = 0.12, nu = 0.2;
  const BDIParams p = BDIParams::full(0.0, mu, nu);
  const auto mc = oracle::mc_conditional_stats(4, 3, 1.0, p, 30000, RngStream(3));
  const double prob = oracle::uniformization_transition(4, 3, 1.0, p);
  CHECK(std::abs(dimm_restricted_up(4, 3, 1.0, mu, nu) / prob - mc.up.mean) < 3.0 * mc.up.se);
  const auto dp = dimm_restricted_down_and_pt(4, 3, 1.0, mu, nu);
  CHECK(std::abs(dp.down / prob - mc.down.mean) < 3.0 * mc.down.se);
  CHECK(std::abs(dp.particle_time / prob - mc.particle_time.mean) <
        3.0 * mc.particle_time.se);
}

TEST_CASE("TKF closed forms match the generating-function route") {
  for (const auto variant : {TKFVariant::StartZeroNuEqualsLambda, TKFVariant::StartOneNuZero})
    for (const auto [lam, mu] : {std::pair{0.07, 0.12}, std::pair{0.12, 0.07}})
      for (std::int64_t j : {0, 1, 2, 4, 6})
        for (double t : {0.2, 1.0, 3.0}) {
          const TKFCase c{variant, j, t, lam, mu};
          const TKFMoments cf = tkf_expected_moments(c);
          const TKFMoments fd = tkf_fd_route(c);
          CHECK(std::abs(cf.up - fd.up) < 1e-6);
          CHECK(std::abs(cf.down - fd.down) < 1e-6);
          CHECK(std::abs(cf.particle_time - fd.particle_time) < 1e-6);
          CHECK(tkf_expected_up(c) == doctest::Approx(cf.up).epsilon(1e-12));
        }
}

TEST_CASE("TKF degenerate rates take the averaged evaluation") {
  const TKFCase c{TKFVariant::StartOneNuZero, 2, 1.0, 0.1, 0.1};
  const TKFMoments cf = tkf_expected_moments(c);
  const TKFMoments fd = tkf_fd_route(c);  // coefficient layer handles lambda = mu
  CHECK(std::abs(cf.up - fd.up) < 1e-5);
  CHECK(std::abs(cf.down - fd.down) < 1e-5);
  CHECK(std::abs(cf.particle_time - fd.particle_time) < 1e-5);
}

TEST_CASE("TKF case 1 vanishes as the birth rate goes to zero") {
  const TKFCase small{TKFVariant::StartZeroNuEqualsLambda, 2, 1.0, 1e-5, 0.12};
  CHECK(std::abs(tkf_expected_up(small)) < 1e-4);
  CHECK(std::abs(dimm_restricted_up(0, 2, 1.0, 0.12, 1e-5)) < 1e-4);
}

TEST_CASE("TKF tiny-time ordering: a birth is required, deaths optional") {
  const double t = 1e-3;
  const TKFCase c{TKFVariant::StartOneNuZero, 2, t, 0.07, 0.12};
  const TKFMoments m = tkf_expected_moments(c);
  CHECK(m.down < m.up);
  CHECK(m.down >= -1e-12);
}

}  // TEST_SUITE
