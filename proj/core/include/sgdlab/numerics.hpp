#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sgdlab {

/// Exactly rounded sum of a list of doubles (Shewchuk partials, fsum-style).
/// The result is independent of the order of the inputs, which makes
/// aggregates built on it reproducible under permutation of the samples.
double exact_sum(std::span<const double> values);

/// Streaming compensated (Neumaier) accumulator for long prefix sums.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }
  void reset() { sum_ = comp_ = 0.0; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Standard normal CDF via Cody's rational Chebyshev approximations of
/// erf/erfc (W. J. Cody, Math. Comp. 23, 1969; the SPECFUN coefficient
/// tables). Max relative error below 7e-16 on each approximation range.
double normal_cdf(double x);

/// Standard normal quantile, Wichura's PPND16 (AS 241), |error| ~ 1e-15.
/// Requires p in (0,1).
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a,x) (series + Lentz continued
/// fraction), used for the chi-square CDF.
double regularized_gamma_p(double a, double x);

/// Chi-square CDF with dof degrees of freedom.
double chi_squared_cdf(double x, double dof);

/// Chi-square quantile by bisection on the CDF. Test-oracle quality.
double chi_squared_quantile(double p, double dof);

}  // namespace sgdlab
