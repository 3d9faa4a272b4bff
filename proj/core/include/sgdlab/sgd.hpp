#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sgdlab/geometry.hpp"
#include "sgdlab/noise.hpp"
#include "sgdlab/schedules.hpp"

namespace sgdlab {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t step, const std::string& what)
      : std::runtime_error(what), step(step) {}
  std::uint64_t step;
};

/// Everything one replication needs: the problem, the schedules, the noise,
/// where to snapshot, and the convergence proxy thresholds.
struct SimulationConfig {
  std::shared_ptr<const Problem> problem;
  ScheduleParams schedule;
  RegularityTriple regularity;
  NoiseModel noise{NoiseKind::gaussian_iid, Mat::Identity(1, 1)};
  std::vector<std::uint64_t> horizons;  // increasing snapshot indices
  double initial_distance = 0.1;

  /// Convergence proxy: the iterate must stay inside the tube from this step
  /// on (0 disables the grace period) and end within final_distance_max of
  /// the manifold. Defaults derive from the horizon grid in run_replication.
  std::optional<std::uint64_t> tube_check_from;
  std::optional<double> final_distance_max;

  bool track_drift = true;

  /// Extra weight exponents evaluated on the same trajectories (used by the
  /// weight-exponent sweep); averages for these are recorded at the final
  /// horizon only.
  std::vector<double> extra_weight_exponents;
};

struct HorizonSnapshot {
  std::uint64_t n = 0;
  std::uint64_t burn_in = 0;
  Vec iterate;             // X_n
  Vec average;             // weighted average over (n0(n), n]
  Vec average_projection;  // closest manifold point of the average
  bool projection_valid = false;
  double distance = 0.0;   // d(X_n, M)
  double objective_iterate = 0.0;
  double objective_average = 0.0;
  double tangential_drift = 0.0;  // sup over the window of |zeta_m - zeta_{n0}|
  double drift_bound = 0.0;       // schedule comparator for the drift
  bool drift_censored = false;
};

struct SweepAverage {
  double weight_exponent = 0.0;
  Vec average;
  Vec average_projection;
  bool projection_valid = false;
};

struct Trajectory {
  std::uint64_t replication = 0;
  std::vector<HorizonSnapshot> snapshots;
  std::vector<SweepAverage> sweep;  // final horizon, extra weight exponents

  bool diverged = false;
  std::uint64_t diverged_at = 0;
  bool stayed_in_tube = true;
  std::uint64_t first_tube_exit = 0;
  bool converged = false;

  Vec final_iterate;
  Vec limit_estimate;  // projection of the final iterate
  bool limit_valid = false;
};

/// One Robbins-Monro step x + gamma_n (f(x) + D_n); the gradient is
/// evaluated before the noise draw. Throws DivergenceError on a non-finite
/// result.
Vec rm_step(const Vec& x, std::uint64_t n, const Problem& prob,
            const ScheduleParams& p, const NoiseModel& noise,
            const RngStream& stream);

/// Full replication: snapshots at each configured horizon with averaging by
/// incremental prefix sums, burn-in captures precomputed from the horizon
/// grid, drift tracking in the problem chart, and the convergence proxy.
/// Memory is O(dim * #horizons); per-step state is never stored.
Trajectory run_replication(const SimulationConfig& cfg, std::uint64_t master_seed,
                           std::uint64_t replication);

/// sqrt(n) * (average - projection of the average) at a snapshot.
Vec rescaled_deviation(const HorizonSnapshot& snap);

/// 2n (F(limit estimate) - F(average)) at a snapshot.
double f_gap_sample(const Problem& prob, const HorizonSnapshot& snap,
                    const Vec& limit_estimate);

/// Measured tangential drift together with its schedule comparator.
struct DriftSample {
  double drift = 0.0;
  double bound = 0.0;
  bool censored = false;
};
DriftSample tangential_drift(const Trajectory& traj, std::uint64_t n);

}  // namespace sgdlab
