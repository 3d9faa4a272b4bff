#include "sgdlab/sgd.hpp"

#include <algorithm>
#include <cmath>

#include "sgdlab/numerics.hpp"

namespace sgdlab {

namespace {

// Neumaier-compensated accumulation per component.
struct CompensatedVec {
  Vec sum;
  Vec comp;

  explicit CompensatedVec(int d) : sum(Vec::Zero(d)), comp(Vec::Zero(d)) {}

  void add_scaled(double scale, const Vec& x) {
    for (int i = 0; i < sum.size(); ++i) {
      const double v = scale * x[i];
      const double t = sum[i] + v;
      if (std::abs(sum[i]) >= std::abs(v)) {
        comp[i] += (sum[i] - t) + v;
      } else {
        comp[i] += (v - t) + sum[i];
      }
      sum[i] = t;
    }
  }

  Vec value() const { return sum + comp; }
};

bool all_finite(const Vec& x) {
  for (int i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

// One drift window (burn[k], horizons[k]]: its own chart anchored at the
// iterate seen at the window start, so the whole window stays in-domain even
// when the trajectory wanders tangentially between windows.
struct DriftTracker {
  std::unique_ptr<NiceRepresentation> chart;
  Vec zeta_anchor;
  Vec zeta;
  double sup = 0.0;
  bool censored = false;
  bool anchored = false;
};

}  // namespace

Vec rm_step(const Vec& x, std::uint64_t n, const Problem& prob,
            const ScheduleParams& p, const NoiseModel& noise,
            const RngStream& stream) {
  const Vec g = prob.gradient(x);
  StepRng rng = stream.at_step(n);
  const double dist =
      (noise.kind() == NoiseKind::state_dependent) ? prob.distance(x) : 0.0;
  const Vec d = noise.sample(rng, dist);
  Vec next = x + step_size(n, p) * (g + d);
  if (!all_finite(next)) {
    throw DivergenceError(n, prob.kind() + ": diverged at step " + std::to_string(n));
  }
  return next;
}

Trajectory run_replication(const SimulationConfig& cfg, std::uint64_t master_seed,
                           std::uint64_t replication) {
  const Problem& prob = *cfg.problem;
  cfg.schedule.validate();
  if (cfg.horizons.empty()) {
    throw std::invalid_argument("run_replication: horizon grid is empty");
  }
  for (std::size_t k = 1; k < cfg.horizons.size(); ++k) {
    if (cfg.horizons[k] <= cfg.horizons[k - 1]) {
      throw std::invalid_argument(
          "run_replication: horizons must be strictly increasing");
    }
  }

  const int d = prob.dim();
  const std::size_t num_h = cfg.horizons.size();
  const std::uint64_t n_final = cfg.horizons.back();
  const double rho = cfg.schedule.rho;

  std::vector<std::uint64_t> burn(num_h);
  for (std::size_t k = 0; k < num_h; ++k) {
    burn[k] = burn_in(cfg.horizons[k], cfg.schedule.beta);
  }
  const std::uint64_t tube_from = cfg.tube_check_from.value_or(burn.front());
  const double final_max =
      cfg.final_distance_max.value_or(0.5 * prob.tube().radius);

  const bool track_drift = cfg.track_drift && prob.manifold_dim() > 0;
  std::vector<double> drift_bounds(num_h, 0.0);
  if (track_drift) {
    for (std::size_t k = 0; k < num_h; ++k) {
      drift_bounds[k] =
          tangential_drift_bound(cfg.horizons[k], cfg.schedule, cfg.regularity);
    }
  }

  RngStream stream(master_seed, replication);
  StepRng init_rng = stream.at_step(0);
  Vec x = prob.sample_tube_point(init_rng, cfg.initial_distance);

  Trajectory traj;
  traj.replication = replication;
  traj.snapshots.resize(num_h);

  // prefix sums of b_i X_i and b_i for the main weights and each sweep weight
  CompensatedVec sum_main(d);
  CompensatedSum mass_main;
  std::vector<Vec> sum_at_burn(num_h, Vec::Zero(d));
  std::vector<double> mass_at_burn(num_h, 0.0);

  const std::size_t num_sweep = cfg.extra_weight_exponents.size();
  std::vector<CompensatedVec> sum_sweep(num_sweep, CompensatedVec(d));
  std::vector<CompensatedSum> mass_sweep(num_sweep);
  std::vector<Vec> sweep_sum_at_burn(num_sweep, Vec::Zero(d));
  std::vector<double> sweep_mass_at_burn(num_sweep, 0.0);

  std::vector<DriftTracker> trackers(track_drift ? num_h : 0);
  const int dzeta = prob.manifold_dim();

  auto capture_burn = [&](std::size_t k) {
    sum_at_burn[k] = sum_main.value();
    mass_at_burn[k] = mass_main.value();
    if (k + 1 == num_h) {
      for (std::size_t j = 0; j < num_sweep; ++j) {
        sweep_sum_at_burn[j] = sum_sweep[j].value();
        sweep_mass_at_burn[j] = mass_sweep[j].value();
      }
    }
  };

  auto anchor_tracker = [&](std::size_t k, const Vec& at) {
    DriftTracker& t = trackers[k];
    t.anchored = true;
    if (!prob.in_tube(at)) {
      t.censored = true;
      return;
    }
    try {
      t.chart = nice_representation(prob, at);
      t.zeta_anchor.resize(dzeta);
      t.zeta.resize(dzeta);
      t.chart->write_zeta(at, t.zeta_anchor);
    } catch (const ChartDomainError&) {
      t.censored = true;
    } catch (const OutsideTubeError&) {
      t.censored = true;
    }
  };

  for (std::size_t k = 0; k < num_h; ++k) {
    if (burn[k] == 0) {
      capture_burn(k);
      if (track_drift) anchor_tracker(k, x);
    }
  }

  // hot-loop scratch
  Vec grad(d), noise_z(d), noise_draw(d), next(d);
  std::size_t horizon_idx = 0;

  for (std::uint64_t n = 1; n <= n_final; ++n) {
    // x_n = x_{n-1} + gamma_n (f(x_{n-1}) + D_n); gradient before noise draw
    prob.gradient_into(x, grad);
    StepRng rng = stream.at_step(n);
    double dist =
        (cfg.noise.kind() == NoiseKind::state_dependent) ? prob.distance(x) : 0.0;
    cfg.noise.sample_into(rng, dist, noise_z, noise_draw);
    next = x + step_size(n, cfg.schedule) * (grad + noise_draw);
    if (!all_finite(next)) {
      throw DivergenceError(n, prob.kind() + ": diverged at step " + std::to_string(n));
    }
    x.swap(next);

    dist = prob.distance(x);
    if (traj.stayed_in_tube && n >= tube_from && !prob.in_tube(x)) {
      traj.stayed_in_tube = false;
      traj.first_tube_exit = n;
      break;  // non-convergent: the rest of the trajectory is not used
    }

    const double b = weight(n, rho);
    sum_main.add_scaled(b, x);
    mass_main.add(b);
    for (std::size_t j = 0; j < num_sweep; ++j) {
      sum_sweep[j].add_scaled(weight(n, cfg.extra_weight_exponents[j]), x);
      mass_sweep[j].add(weight(n, cfg.extra_weight_exponents[j]));
    }

    for (std::size_t k = 0; k < num_h; ++k) {
      if (burn[k] == n) {
        capture_burn(k);
        if (track_drift) anchor_tracker(k, x);
      }
    }

    if (track_drift) {
      for (std::size_t k = 0; k < num_h; ++k) {
        DriftTracker& t = trackers[k];
        if (!t.anchored || t.censored || n <= burn[k] || n > cfg.horizons[k]) {
          continue;
        }
        try {
          t.chart->write_zeta(x, t.zeta);
          t.sup = std::max(t.sup, (t.zeta - t.zeta_anchor).norm());
        } catch (const ChartDomainError&) {
          t.censored = true;
        }
      }
    }

    if (horizon_idx < num_h && n == cfg.horizons[horizon_idx]) {
      const std::size_t k = horizon_idx++;
      HorizonSnapshot& snap = traj.snapshots[k];
      snap.n = n;
      snap.burn_in = burn[k];
      snap.iterate = x;
      snap.average =
          (sum_main.value() - sum_at_burn[k]) / (mass_main.value() - mass_at_burn[k]);
      snap.distance = dist;
      snap.objective_iterate = prob.objective(x);
      snap.objective_average = prob.objective(snap.average);
      if (track_drift) {
        snap.tangential_drift = trackers[k].sup;
        snap.drift_censored = trackers[k].censored || !trackers[k].anchored;
      } else {
        snap.drift_censored = true;
      }
      snap.drift_bound = drift_bounds[k];
      if (prob.in_tube(snap.average)) {
        snap.average_projection = prob.project(snap.average);
        snap.projection_valid = true;
      } else {
        snap.average_projection = Vec::Zero(d);
        snap.projection_valid = false;
      }
      if (k + 1 == num_h) {
        for (std::size_t j = 0; j < num_sweep; ++j) {
          SweepAverage sw;
          sw.weight_exponent = cfg.extra_weight_exponents[j];
          sw.average = (sum_sweep[j].value() - sweep_sum_at_burn[j]) /
                       (mass_sweep[j].value() - sweep_mass_at_burn[j]);
          if (prob.in_tube(sw.average)) {
            sw.average_projection = prob.project(sw.average);
            sw.projection_valid = true;
          } else {
            sw.average_projection = Vec::Zero(d);
            sw.projection_valid = false;
          }
          traj.sweep.push_back(std::move(sw));
        }
      }
    }
  }

  traj.final_iterate = x;
  if (prob.in_tube(x)) {
    traj.limit_estimate = prob.project(x);
    traj.limit_valid = true;
  } else {
    traj.limit_estimate = Vec::Zero(d);
    traj.limit_valid = false;
  }
  traj.converged = traj.stayed_in_tube && traj.limit_valid &&
                   prob.distance(x) <= final_max && horizon_idx == num_h;
  return traj;
}

Vec rescaled_deviation(const HorizonSnapshot& snap) {
  if (!snap.projection_valid) {
    throw std::invalid_argument(
        "rescaled_deviation: average has no valid projection");
  }
  return std::sqrt(static_cast<double>(snap.n)) *
         (snap.average - snap.average_projection);
}

double f_gap_sample(const Problem& prob, const HorizonSnapshot& snap,
                    const Vec& limit_estimate) {
  if (!snap.projection_valid) {
    throw std::invalid_argument("f_gap_sample: average has no valid projection");
  }
  const double f_limit = prob.objective(limit_estimate);
  const double f_avg_proj = prob.objective(snap.average_projection);
  if (std::abs(f_limit - f_avg_proj) > 1e-8) {
    throw std::logic_error(
        "f_gap_sample: objective differs between the limit estimate and the "
        "projected average beyond 1e-8");
  }
  return 2.0 * static_cast<double>(snap.n) * (f_limit - snap.objective_average);
}

DriftSample tangential_drift(const Trajectory& traj, std::uint64_t n) {
  for (const auto& snap : traj.snapshots) {
    if (snap.n == n) {
      return DriftSample{snap.tangential_drift, snap.drift_bound,
                         snap.drift_censored};
    }
  }
  throw std::invalid_argument("tangential_drift: no snapshot at the given horizon");
}

}  // namespace sgdlab
