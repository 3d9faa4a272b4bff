#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace sgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Unbiased sample covariance (divisor R-1), symmetric by construction.
/// Entry sums use exactly rounded accumulation, so the result is invariant
/// under permutation of the samples.
Mat empirical_covariance(const std::vector<Vec>& samples);

Vec sample_mean(const std::vector<Vec>& samples);

/// ||a - b||_F / ||b||_F; b must be nonzero.
double frobenius_rel_err(const Mat& a, const Mat& b);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

/// Least squares of log(value) against log(n); at least three positive
/// points required.
RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

/// Kolmogorov-Smirnov statistic of samples against the standard normal CDF.
/// Samples must already be standardized by the *theoretical* scale.
double ks_normal(std::vector<double> samples);

/// KS statistic of nonnegative samples against the chi-square CDF.
double ks_chi_squared(std::vector<double> samples, double dof);

/// Asymptotic KS acceptance band sqrt(-log(alpha/2)/2)/sqrt(n).
double ks_critical_value(std::size_t n, double alpha);

struct MahalanobisReport {
  double statistic = 0.0;        // KS distance of the in-range squared
                                 // distances to the chi-square CDF
  int dof = 0;                   // rank of sigma
  double mean_in_range = 0.0;    // mean squared in-range component
  double mean_out_of_range = 0.0;  // mean squared residual outside range(sigma)
  std::size_t count = 0;
};

/// Rank-aware goodness of fit: samples are projected onto range(sigma),
/// squared Mahalanobis distances use the pseudo-inverse there, and the
/// out-of-range residual energy is reported separately.
MahalanobisReport mahalanobis_gof(const std::vector<Vec>& samples, const Mat& sigma);

struct FGapReport {
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  double predicted_mean = 0.0;      // sum of the spectrum
  double predicted_variance = 0.0;  // twice the sum of squares
  double mean_rel_err = 0.0;
  double variance_rel_err = 0.0;
  double cdf_distance = 0.0;  // KS vs an internal Monte Carlo reference of
                              // sum lambda_i Z_i^2
};

/// Moments and distributional check of performance-gap samples against the
/// weighted chi-square law with the given spectrum.
FGapReport f_gap_check(const std::vector<double>& samples,
                       const std::vector<double>& spectrum);

}  // namespace sgdlab
