#pragma once

#include <string>
#include <vector>

#include "bdi/common.hpp"
#include "bdi/model.hpp"

namespace bdi {

// Observed Fisher information assembled from Louis's identity:
//   I(theta) = E[-l''_c | Y] - E[l'_c l'_c^T | Y],
// evaluated at the MLE.  Conditional on the observed endpoints, the path
// segments of distinct intervals are independent, so the cross terms factor
// into products of per-interval conditional mean scores.
struct InfoMatrix {
  std::vector<std::string> param_names;
  std::vector<std::vector<double>> entries;  // symmetric d x d
  std::vector<std::vector<double>> mc_se;    // per-entry Monte Carlo SE (empty when exact)

  std::size_t dim() const { return entries.size(); }
};

// Restricted immigration model, parameters (lambda, mu); exact moments.
InfoMatrix louis_information_restricted(const std::vector<Interval>& intervals,
                                        const BDIParams& mle);

// Death-immigration model, parameters (mu, nu); exact moments.
InfoMatrix louis_information_death_imm(const std::vector<Interval>& intervals,
                                       const BDIParams& mle);

// Full model, parameters (lambda, mu, nu); expectations estimated over
// endpoint-conditioned path draws, with batch-means Monte Carlo SEs.
InfoMatrix louis_information_full_mc(const std::vector<Interval>& intervals,
                                     const BDIParams& mle, std::int64_t n_paths,
                                     RngStream rng);

struct WaldInterval {
  double lo = 0.0, hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Wald intervals mle_k +- z * sqrt((I^{-1})_{kk}), truncated below at zero on
// the rate scale; log_scale uses the delta method on log theta instead.
std::vector<WaldInterval> wald_ci(const std::vector<double>& mle, const InfoMatrix& info,
                                  double level = 0.95, bool log_scale = false);

// Dense inverse of a small symmetric matrix; throws singular_information.
std::vector<std::vector<double>> invert_info(const InfoMatrix& info);

}  // namespace bdi
