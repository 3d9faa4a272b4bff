#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sgdlab/config.hpp"
#include "sgdlab/sgd.hpp"
#include "sgdlab/stats.hpp"

namespace sgdlab {

/// One pass/fail line with the measured value, the tolerance it was held
/// against, and the margin to the boundary (positive = passed with room).
struct CheckOutcome {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  double margin = 0.0;
};

struct DeviationRow {
  std::uint64_t replication = 0;
  std::uint64_t horizon = 0;
  Vec components;
};

struct RatePoint {
  std::uint64_t n = 0;
  double mean_sq_dist = 0.0;
  double stderr_mean = 0.0;
};

struct CltReport {
  std::uint64_t total = 0;
  std::uint64_t included = 0;
  std::uint64_t excluded = 0;
  bool invalid = false;           // exclusions above the configured ceiling
  bool degenerate_noise = false;  // zero covariance: distribution checks skipped

  Mat empirical_cov;
  Mat sigma_theory;  // mean of the per-replication theoretical covariances
  double frobenius_rel = 0.0;

  std::vector<double> direction_ks;  // per positive direction, pooled over
                                     // per-replication standardized coords
  MahalanobisReport mahalanobis;     // per-replication whitened, chi-square null
  double tangential_energy_ratio = 0.0;

  FGapReport f_gap;
  std::vector<double> f_gap_spectrum;  // mean predicted spectrum

  std::vector<RatePoint> rate_points;
  RateFit rate;

  double drift_mean = 0.0;
  double theta_mean = 0.0;           // mean |theta_n| = d(X_n, M) at the horizon
  double drift_theta_ratio = 0.0;
  double drift_bound_mean = 0.0;
  std::uint64_t drift_censored = 0;

  std::vector<DeviationRow> deviations;          // all horizons, included reps
  std::vector<double> qq_standardized;           // pooled standardized sample
  std::vector<double> whitened_distances;        // per-replication squared
                                                 // whitened deviations

  /// n * sigma_n^2 at the final horizon: the exact finite-horizon variance
  /// factor separating the sqrt(n)-scaled deviation from the limit law
  /// (approaches c(rho)^2 as the burn-in fraction vanishes).
  double window_variance_factor = 1.0;

  std::vector<CheckOutcome> checks;
  bool pass() const;
};

struct RhoPoint {
  double rho = 0.0;
  double trace_measured = 0.0;
  double trace_ratio = 0.0;      // vs the first (base) exponent
  double predicted_ratio = 0.0;  // c(rho)^2 / c(base)^2
  std::uint64_t samples = 0;
};

struct RhoSweepReport {
  std::uint64_t total = 0;
  std::uint64_t included = 0;
  bool invalid = false;
  std::vector<RhoPoint> points;
  double argmin_rho = 0.0;
  std::vector<CheckOutcome> checks;
  bool pass() const;
};

struct RateCase {
  double gamma_exp = 0.0;
  RateFit fit;
  std::vector<RatePoint> points;
  std::uint64_t included = 0;
  std::uint64_t excluded = 0;
};

struct RateReport {
  std::vector<RateCase> cases;
  std::vector<CheckOutcome> checks;
  bool pass() const;
};

struct OracleSweepPoint {
  std::uint64_t n = 0;
  double max_weighted_norm = 0.0;
};

struct OracleCaseReport {
  std::string name;
  Mat limit_cov;
  Mat empirical_cov;
  double frobenius_rel = 0.0;
  double limit_residual = 0.0;
  std::vector<OracleSweepPoint> sweep;
};

struct OracleReport {
  std::vector<OracleCaseReport> cases;
  std::vector<CheckOutcome> checks;
  bool pass() const;
};

struct FeasibleRegionReport {
  RegularityTriple regularity;
  Interval gamma_interval;
  bool has_rho = false;
  double gamma_used = 0.0;
  Interval rho_interval;
  bool has_beta = false;
  double rho_used = 0.0;
  Interval beta_interval;
  std::string rendered;  // human-readable text, also printed by the CLI
};

/// Monte Carlo check of both limit laws at the final horizon.
CltReport run_clt_experiment(const ExperimentConfig& cfg);

/// Distance-decay regression per step exponent in cfg.rate_gammas.
RateReport run_rate_experiment(const ExperimentConfig& cfg);

/// Weight-exponent sweep on common trajectories; traces of the deviation
/// covariance per exponent against the squared weight factor.
RhoSweepReport run_rho_sweep(const ExperimentConfig& cfg);

/// Covariance and window-sum limit checks of the linear averaged system.
OracleReport run_linear_oracle(const ExperimentConfig& cfg);

FeasibleRegionReport feasible_region(const RegularityTriple& r,
                                     std::optional<double> gamma_exp,
                                     std::optional<double> rho);

/// Feasibility gate shared by every experiment entry point: throws
/// ConfigError when the assumptions fail and force is not set.
ConditionReport gate_assumptions(const ExperimentConfig& cfg);

}  // namespace sgdlab
