#pragma once

#include <functional>
#include <vector>

namespace bdi {

// Adaptive Simpson quadrature with absolute tolerance and panel doubling at
// the top level.  Throws quadrature_failure if the depth limit is reached.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 32);

// Monotone cubic (Fritsch-Carlson) interpolant through sorted nodes.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;

  // For a nondecreasing interpolant: solve f(x) = target by bisection.
  double invert(double target, double x_tol) const;

  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }

 private:
  std::vector<double> x_, y_, d_;  // nodes and node slopes
};

// Cumulative integral table of a nonnegative density on [a, b], built on the
// adaptive-Simpson panel grid: x holds node positions, F the running integral.
struct CdfTable {
  std::vector<double> x, F;
  double total = 0.0;
};

CdfTable build_cdf(const std::function<double(double)>& f, double a, double b,
                   double abs_tol, int max_depth = 32);

// Chebyshev-Lobatto interpolant on [a, b] (barycentric form).  Spectrally
// accurate for analytic functions; used for transition-probability curves.
class Cheb {
 public:
  Cheb() = default;
  Cheb(double a, double b, std::vector<double> node_values);

  // Node k of n+1: a + (b-a)/2 * (1 - cos(pi k / n)), ascending.
  static std::vector<double> nodes(double a, double b, std::size_t n_plus_1);

  double operator()(double x) const;

 private:
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> f_, x_;
};

}  // namespace bdi
