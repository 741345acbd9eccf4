#include "bdi/stats_util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdi/common.hpp"

namespace bdi {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// AS 241 algorithm PPND16.
double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

namespace {

// Series expansion for P(a, x), x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw numeric_error("gamma_p: series did not converge");
}

// Continued fraction for Q(a, x), x >= a + 1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw numeric_error("gamma_q: continued fraction did not converge");
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chisq_sf(double x, double k) {
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * k, 0.5 * x);
}

namespace {

// Pool adjacent cells until every expected count reaches the floor.
void pool_bins(std::vector<double>& obs, std::vector<double>& exp, double min_expected) {
  std::vector<double> o, e;
  double co = 0.0, ce = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    co += obs[i];
    ce += exp[i];
    if (ce >= min_expected) {
      o.push_back(co);
      e.push_back(ce);
      co = ce = 0.0;
    }
  }
  if (ce > 0.0 || co > 0.0) {
    if (!e.empty()) {
      o.back() += co;
      e.back() += ce;
    } else {
      o.push_back(co);
      e.push_back(ce);
    }
  }
  obs = std::move(o);
  exp = std::move(e);
}

}  // namespace

double chisq_gof_pvalue(const std::vector<double>& observed,
                        const std::vector<double>& expected,
                        double min_expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chisq_gof_pvalue: size mismatch");
  std::vector<double> obs = observed, exp = expected;
  pool_bins(obs, exp, min_expected);
  if (obs.size() < 2) return 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double d = obs[i] - exp[i];
    stat += d * d / exp[i];
  }
  return chisq_sf(stat, double(obs.size()) - 1.0);
}

double chisq_two_sample_pvalue(const std::vector<std::int64_t>& count1,
                               const std::vector<std::int64_t>& count2,
                               double min_expected) {
  if (count1.size() != count2.size() || count1.empty())
    throw std::invalid_argument("chisq_two_sample_pvalue: size mismatch");
  double n1 = 0.0, n2 = 0.0;
  for (auto c : count1) n1 += double(c);
  for (auto c : count2) n2 += double(c);
  if (n1 == 0.0 || n2 == 0.0) throw std::invalid_argument("chisq_two_sample_pvalue: empty sample");

  // Pool cells by the pooled expected count so sparse tails merge.
  std::vector<double> a, b;
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < count1.size(); ++i) {
    ca += double(count1[i]);
    cb += double(count2[i]);
    const double pooled = (ca + cb) * n1 / (n1 + n2);
    const double pooled2 = (ca + cb) * n2 / (n1 + n2);
    if (pooled >= min_expected && pooled2 >= min_expected) {
      a.push_back(ca);
      b.push_back(cb);
      ca = cb = 0.0;
    }
  }
  if ((ca > 0.0 || cb > 0.0) && !a.empty()) {
    a.back() += ca;
    b.back() += cb;
  }
  if (a.size() < 2) return 1.0;
  const double k1 = std::sqrt(n2 / n1), k2 = std::sqrt(n1 / n2);
  double stat = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = k1 * a[i] - k2 * b[i];
    stat += d * d / (a[i] + b[i]);
  }
  return chisq_sf(stat, double(a.size()) - 1.0);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double MeanVar::se() const { return n > 1 ? std::sqrt(var / double(n)) : 0.0; }

MeanVar mean_var(const std::vector<double>& v) {
  MeanVar r;
  r.n = std::int64_t(v.size());
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.var = ss / double(v.size() - 1);
  }
  return r;
}

}  // namespace bdi
