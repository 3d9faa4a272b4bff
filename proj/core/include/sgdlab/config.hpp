#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/geometry.hpp"
#include "sgdlab/noise.hpp"
#include "sgdlab/schedules.hpp"

namespace sgdlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  std::string kind = "flat_quadratic";
  int dim = 2;                          // sphere_well ambient dimension
  int manifold_dim = 1;                 // flat_quadratic tangential dimension
  std::vector<double> quadratic_diag;   // flat_quadratic: diagonal A
  std::vector<std::vector<double>> quadratic;  // flat_quadratic: full A
  double hyperbola_c = 1.0;
};

std::shared_ptr<const Problem> make_problem(const ProblemConfig& pc);

/// Noise covariance, either identity * scale or a full matrix.
struct GammaSpec {
  std::optional<double> identity_scale = 1.0;
  std::vector<std::vector<double>> matrix;

  Mat as_matrix(int dim) const;
};

struct NoiseConfig {
  std::string kind = "gaussian_iid";
  GammaSpec gamma;
};

struct ToleranceSet {
  double exclusion_ceiling = 0.05;
  double frobenius_rel = 0.15;
  double ks_alpha = 0.01;
  double tangential_energy_ratio = 0.10;
  double fgap_mean_rel = 0.15;
  double fgap_var_rel = 0.30;
  double rho_trace_rel = 0.20;
  double rate_slope_abs = 0.10;
  double oracle_cov_rel = 0.10;
  double oracle_limit_residual = 0.01;
  double drift_ratio_min = 3.0;
};

struct OracleCase {
  std::string name = "scalar";
  std::vector<std::vector<double>> h = {{-2.0}};
  std::vector<std::vector<double>> gamma_theta = {{1.0}};
};

struct OracleConfig {
  std::vector<OracleCase> cases;
  std::uint64_t draws = 5000;
  std::uint64_t horizon = 100000;
  std::uint64_t limit_check_l = 1000;
  std::uint64_t limit_check_n = 1000000;
  std::vector<std::uint64_t> sweep_horizons = {10000, 100000, 1000000};
};

struct ExperimentConfig {
  ProblemConfig problem;
  ScheduleParams schedule;
  RegularityTriple regularity;
  NoiseConfig noise;
  std::uint64_t replications = 2000;
  std::uint64_t master_seed = 1;
  std::vector<std::uint64_t> horizons = {1000, 3162, 10000, 31623, 100000};
  double initial_distance = 0.1;
  std::optional<std::uint64_t> tube_check_from;
  std::optional<double> final_distance_max;
  std::string out_dir = "out";
  int workers = 1;
  bool force = false;
  ToleranceSet tolerances;
  std::vector<double> sweep_rhos = {0.0, 0.5, 1.0};
  std::vector<double> rate_gammas = {0.75, 0.8, 0.9};
  OracleConfig oracle;

  /// Canonical JSON: sorted keys, lossless doubles; parse(emit(c)) == c.
  std::string to_json_text() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

}  // namespace sgdlab
