#pragma once

#include <vector>
#include <cstdint>

namespace bdi {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal quantile (Wichura's AS 241, ~1e-15 accuracy).
double norm_quantile(double p);

// Regularized lower incomplete gamma P(a, x) and upper Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with k degrees of freedom.
double chisq_sf(double x, double k);

// Pearson chi-square goodness-of-fit p-value.  Bins with expected count below
// `min_expected` are pooled into their left neighbour before the statistic is
// formed.  `expected` must sum to the same total as `observed` (up to rounding).
double chisq_gof_pvalue(const std::vector<double>& observed,
                        const std::vector<double>& expected,
                        double min_expected = 5.0);

// Two-sample chi-square homogeneity test on aligned histograms of counts.
double chisq_two_sample_pvalue(const std::vector<std::int64_t>& count1,
                               const std::vector<std::int64_t>& count2,
                               double min_expected = 5.0);

double median(std::vector<double> v);

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;   // sample variance (n-1 denominator)
  std::int64_t n = 0;
  double se() const;
};

MeanVar mean_var(const std::vector<double>& v);

}  // namespace bdi
