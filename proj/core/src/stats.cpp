#include "sgdlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgdlab/numerics.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

Vec sample_mean(const std::vector<Vec>& samples) {
  if (samples.empty()) throw std::invalid_argument("sample_mean: no samples");
  const int d = static_cast<int>(samples.front().size());
  Vec mean(d);
  std::vector<double> column(samples.size());
  for (int j = 0; j < d; ++j) {
    for (std::size_t r = 0; r < samples.size(); ++r) column[r] = samples[r][j];
    mean[j] = exact_sum(column) / static_cast<double>(samples.size());
  }
  return mean;
}

Mat empirical_covariance(const std::vector<Vec>& samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("empirical_covariance: need at least 2 samples");
  }
  const int d = static_cast<int>(samples.front().size());
  const std::size_t r = samples.size();
  const Vec mean = sample_mean(samples);

  Mat cov(d, d);
  std::vector<double> products(r);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      for (std::size_t k = 0; k < r; ++k) {
        products[k] = (samples[k][i] - mean[i]) * (samples[k][j] - mean[j]);
      }
      const double s = exact_sum(products) / static_cast<double>(r - 1);
      cov(i, j) = s;
      cov(j, i) = s;
    }
  }
  return cov;
}

double frobenius_rel_err(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("frobenius_rel_err: shape mismatch");
  }
  const double denom = b.norm();
  if (denom == 0.0) throw std::invalid_argument("frobenius_rel_err: B is zero");
  return (a - b).norm() / denom;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("rate_fit: need >= 3 points");
  const auto n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, v] : points) {
    if (!(v > 0.0) || !(x > 0.0)) {
      throw std::invalid_argument("rate_fit: points must be positive");
    }
    const double lx = std::log(x);
    const double ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  RateFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (const auto& [x, v] : points) {
    const double resid = std::log(v) - (fit.intercept + fit.slope * std::log(x));
    ss += resid * resid;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

namespace {

template <typename Cdf>
double ks_statistic(std::vector<double>& samples, Cdf cdf) {
  if (samples.empty()) throw std::invalid_argument("ks: no samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    stat = std::max(stat, std::max(hi, lo));
  }
  return stat;
}

}  // namespace

double ks_normal(std::vector<double> samples) {
  return ks_statistic(samples, [](double x) { return normal_cdf(x); });
}

double ks_chi_squared(std::vector<double> samples, double dof) {
  return ks_statistic(samples,
                      [dof](double x) { return chi_squared_cdf(x, dof); });
}

double ks_critical_value(std::size_t n, double alpha) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

MahalanobisReport mahalanobis_gof(const std::vector<Vec>& samples, const Mat& sigma) {
  if (samples.empty()) throw std::invalid_argument("mahalanobis_gof: no samples");
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
  const Vec evals = es.eigenvalues();
  const double specrad = evals.cwiseAbs().maxCoeff();
  if (specrad == 0.0) {
    throw std::invalid_argument("mahalanobis_gof: sigma is zero");
  }
  const double threshold = 1e-10 * specrad;
  std::vector<int> range_idx;
  for (int i = 0; i < evals.size(); ++i) {
    if (evals[i] > threshold) range_idx.push_back(i);
  }
  if (range_idx.empty()) {
    throw std::invalid_argument("mahalanobis_gof: sigma has rank zero");
  }

  MahalanobisReport rep;
  rep.dof = static_cast<int>(range_idx.size());
  rep.count = samples.size();

  std::vector<double> distances(samples.size());
  std::vector<double> in_energy(samples.size());
  std::vector<double> out_energy(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Vec& s = samples[k];
    double dist2 = 0.0;
    double inr = 0.0;
    for (int i : range_idx) {
      const double c = es.eigenvectors().col(i).dot(s);
      dist2 += c * c / evals[i];
      inr += c * c;
    }
    distances[k] = dist2;
    in_energy[k] = inr;
    out_energy[k] = s.squaredNorm() - inr;
  }
  rep.mean_in_range =
      exact_sum(in_energy) / static_cast<double>(in_energy.size());
  rep.mean_out_of_range =
      exact_sum(out_energy) / static_cast<double>(out_energy.size());
  rep.statistic = ks_chi_squared(std::move(distances), rep.dof);
  return rep;
}

FGapReport f_gap_check(const std::vector<double>& samples,
                       const std::vector<double>& spectrum) {
  if (spectrum.empty()) throw std::invalid_argument("f_gap_check: empty spectrum");
  if (samples.size() < 2) throw std::invalid_argument("f_gap_check: need samples");

  FGapReport rep;
  for (double lam : spectrum) {
    rep.predicted_mean += lam;
    rep.predicted_variance += 2.0 * lam * lam;
  }

  rep.sample_mean = exact_sum(samples) / static_cast<double>(samples.size());
  std::vector<double> centered_sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double c = samples[i] - rep.sample_mean;
    centered_sq[i] = c * c;
  }
  rep.sample_variance =
      exact_sum(centered_sq) / static_cast<double>(samples.size() - 1);

  rep.mean_rel_err =
      std::abs(rep.sample_mean - rep.predicted_mean) / std::abs(rep.predicted_mean);
  rep.variance_rel_err = std::abs(rep.sample_variance - rep.predicted_variance) /
                         std::abs(rep.predicted_variance);

  // Internal Monte Carlo reference of sum lambda_i Z_i^2; fixed seed, so the
  // reference (and the report) is reproducible.
  constexpr std::size_t kReferenceDraws = 1'000'000;
  RngStream stream(0x5eedf6ab5u, 7);
  std::vector<double> reference(kReferenceDraws);
  StepRng rng = stream.at_step(1);
  for (std::size_t i = 0; i < kReferenceDraws; ++i) {
    double v = 0.0;
    for (double lam : spectrum) {
      const double z = rng.next_normal();
      v += lam * z * z;
    }
    reference[i] = v;
  }
  std::sort(reference.begin(), reference.end());

  // Two-sided sup distance between the sample ECDF and the reference ECDF.
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto lo = std::lower_bound(reference.begin(), reference.end(), sorted[i]);
    const double f = static_cast<double>(lo - reference.begin()) /
                     static_cast<double>(reference.size());
    stat = std::max(stat, std::max((static_cast<double>(i) + 1.0) / n - f,
                                   f - static_cast<double>(i) / n));
  }
  rep.cdf_distance = stat;
  return rep;
}

}  // namespace sgdlab
