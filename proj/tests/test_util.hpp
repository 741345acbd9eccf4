#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bdi/common.hpp"
#include "bdi/model.hpp"

namespace bdi::testutil {

// Small Nelder-Mead maximizer used as an independent optimization oracle.
inline std::vector<double> nelder_mead_max(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
    double scale, int max_iter = 2000, double tol = 1e-12) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t k = 0; k < n; ++k) simplex[k + 1][k] += scale;
  std::vector<double> fx(n + 1);
  for (std::size_t k = 0; k <= n; ++k) fx[k] = f(simplex[k]);

  for (int it = 0; it < max_iter; ++it) {
    // order ascending by f (we maximize, so best = last)
    for (std::size_t a = 0; a <= n; ++a)
      for (std::size_t b = a + 1; b <= n; ++b)
        if (fx[b] < fx[a]) {
          std::swap(fx[a], fx[b]);
          std::swap(simplex[a], simplex[b]);
        }
    if (std::abs(fx[n] - fx[0]) < tol * (std::abs(fx[n]) + 1e-30)) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[k][d] / double(n);
    auto blend = [&](double alpha) {
      std::vector<double> p(n);
      for (std::size_t d = 0; d < n; ++d)
        p[d] = centroid[d] + alpha * (centroid[d] - simplex[0][d]);
      return p;
    };
    auto refl = blend(1.0);
    const double fr = f(refl);
    if (fr > fx[n]) {
      auto exp_p = blend(2.0);
      const double fe = f(exp_p);
      if (fe > fr) {
        simplex[0] = exp_p;
        fx[0] = fe;
      } else {
        simplex[0] = refl;
        fx[0] = fr;
      }
    } else if (fr > fx[1]) {
      simplex[0] = refl;
      fx[0] = fr;
    } else {
      auto con = blend(-0.5);
      const double fc = f(con);
      if (fc > fx[0]) {
        simplex[0] = con;
        fx[0] = fc;
      } else {
        for (std::size_t k = 0; k < n; ++k) {
          for (std::size_t d = 0; d < n; ++d)
            simplex[k][d] = 0.5 * (simplex[k][d] + simplex[n][d]);
          fx[k] = f(simplex[k]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k <= n; ++k)
    if (fx[k] > fx[best]) best = k;
  return simplex[best];
}

// Leading-principal-minor check of positive semidefiniteness for d <= 3.
inline bool is_psd(const std::vector<std::vector<double>>& m, double tol) {
  const std::size_t d = m.size();
  if (d >= 1 && m[0][0] < -tol) return false;
  if (d >= 2) {
    const double det2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det2 < -tol) return false;
  }
  if (d >= 3) {
    const double det3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                        m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                        m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (det3 < -tol) return false;
  }
  return true;
}

// Random trajectory generator for property tests.
inline Trajectory random_trajectory(RngStream& rng, std::int64_t max_start = 8,
                                    double horizon = 3.0) {
  Trajectory t;
  t.initial_state = rng.uniform_int(0, max_start);
  t.horizon = horizon;
  std::int64_t x = t.initial_state;
  double time = 0.0;
  while (true) {
    time += rng.exponential(2.0);
    if (time >= horizon) break;
    int dir = (x == 0 || rng.u01() < 0.55) ? +1 : -1;
    t.jumps.push_back({time, dir});
    x += dir;
  }
  return t;
}

}  // namespace bdi::testutil
