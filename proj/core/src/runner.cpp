#include "sgdlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "sgdlab/linear_oracle.hpp"
#include "sgdlab/numerics.hpp"

namespace sgdlab {

namespace {

bool all_checks_pass(const std::vector<CheckOutcome>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckOutcome& c) { return c.pass; });
}

CheckOutcome check_at_most(std::string name, double measured, double tolerance) {
  CheckOutcome c;
  c.name = std::move(name);
  c.measured = measured;
  c.tolerance = tolerance;
  c.margin = tolerance - measured;
  c.pass = measured <= tolerance;
  return c;
}

CheckOutcome check_at_least(std::string name, double measured, double tolerance) {
  CheckOutcome c;
  c.name = std::move(name);
  c.measured = measured;
  c.tolerance = tolerance;
  c.margin = measured - tolerance;
  c.pass = measured >= tolerance;
  return c;
}

struct ReplicationOutcome {
  Trajectory traj;
  bool diverged = false;
  std::uint64_t diverged_at = 0;
};

std::vector<ReplicationOutcome> run_replications(const SimulationConfig& sim,
                                                 std::uint64_t master_seed,
                                                 std::uint64_t count, int workers) {
  std::vector<ReplicationOutcome> out(count);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    for (;;) {
      const std::uint64_t rep = next.fetch_add(1);
      if (rep >= count) return;
      try {
        out[rep].traj = run_replication(sim, master_seed, rep);
      } catch (const DivergenceError& e) {
        out[rep].diverged = true;
        out[rep].diverged_at = e.step;
        out[rep].traj.replication = rep;
        out[rep].traj.converged = false;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = std::max(1, workers);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

SimulationConfig make_sim(const ExperimentConfig& cfg,
                          std::shared_ptr<const Problem> problem) {
  SimulationConfig sim;
  sim.problem = std::move(problem);
  sim.schedule = cfg.schedule;
  sim.regularity = cfg.regularity;
  sim.noise = NoiseModel(noise_kind_from_string(cfg.noise.kind),
                         cfg.noise.gamma.as_matrix(sim.problem->dim()));
  sim.horizons = cfg.horizons;
  sim.initial_distance = cfg.initial_distance;
  sim.tube_check_from = cfg.tube_check_from;
  sim.final_distance_max = cfg.final_distance_max;
  return sim;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return exact_sum(v) / static_cast<double>(v.size());
}

}  // namespace

bool CltReport::pass() const { return !invalid && all_checks_pass(checks); }
bool RhoSweepReport::pass() const { return !invalid && all_checks_pass(checks); }
bool RateReport::pass() const { return all_checks_pass(checks); }
bool OracleReport::pass() const { return all_checks_pass(checks); }

ConditionReport gate_assumptions(const ExperimentConfig& cfg) {
  cfg.schedule.validate();
  cfg.regularity.validate();
  ConditionReport rep = check_assumptions(cfg.schedule, cfg.regularity);
  if (!rep.all_pass() && !cfg.force) {
    std::string failed;
    for (const auto& item : rep.items) {
      if (!item.pass) {
        if (!failed.empty()) failed += ", ";
        failed += item.name;
      }
    }
    throw ConfigError("feasibility assumptions fail (" + failed +
                      "); rerun with force to acknowledge");
  }
  return rep;
}

CltReport run_clt_experiment(const ExperimentConfig& cfg) {
  gate_assumptions(cfg);
  auto problem = make_problem(cfg.problem);
  const int d = problem->dim();
  SimulationConfig sim = make_sim(cfg, problem);
  const Mat gamma = cfg.noise.gamma.as_matrix(d);

  const auto outcomes =
      run_replications(sim, cfg.master_seed, cfg.replications, cfg.workers);

  CltReport rep;
  rep.total = cfg.replications;
  rep.degenerate_noise = sim.noise.degenerate();
  {
    const std::uint64_t n_last = cfg.horizons.back();
    const double sn = sigma_n(n_last, cfg.schedule);
    rep.window_variance_factor = static_cast<double>(n_last) * sn * sn;
  }

  const std::size_t num_h = cfg.horizons.size();

  std::vector<Vec> devs_final;
  Mat sigma_sum = Mat::Zero(d, d);
  std::vector<std::vector<double>> dist_sq_by_horizon(num_h);
  std::vector<double> whitened_dist;
  std::vector<double> in_energy, out_energy;
  std::vector<std::vector<double>> dir_components;  // per direction index
  std::vector<double> fgap_samples;
  std::vector<std::vector<double>> spectra;  // per-replication predicted spectrum
  std::vector<double> drifts, drift_bounds, thetas;
  std::uint64_t sigma_count = 0;

  for (const auto& oc : outcomes) {
    const Trajectory& t = oc.traj;
    if (oc.diverged || !t.converged) {
      ++rep.excluded;
      continue;
    }
    const HorizonSnapshot& last = t.snapshots.back();
    if (!last.projection_valid) {
      ++rep.excluded;
      continue;
    }
    ++rep.included;

    for (std::size_t k = 0; k < num_h; ++k) {
      const HorizonSnapshot& snap = t.snapshots[k];
      dist_sq_by_horizon[k].push_back(snap.distance * snap.distance);
      if (snap.projection_valid) {
        DeviationRow row;
        row.replication = t.replication;
        row.horizon = snap.n;
        row.components = rescaled_deviation(snap);
        rep.deviations.push_back(std::move(row));
      }
    }

    const Vec dev = rescaled_deviation(last);
    devs_final.push_back(dev);

    if (!rep.degenerate_noise) {
      const LimitLaw law = limit_law(*problem, t.limit_estimate, gamma,
                                     cfg.schedule.rho);
      sigma_sum += law.sigma;
      ++sigma_count;
      spectra.push_back(law.perf_spectrum);

      Eigen::SelfAdjointEigenSolver<Mat> es(law.sigma);
      const double specrad = es.eigenvalues().cwiseAbs().maxCoeff();
      const double threshold = 1e-10 * (specrad == 0.0 ? 1.0 : specrad);
      double dist2 = 0.0;
      double inr = 0.0;
      std::size_t dir_index = 0;
      for (int i = d - 1; i >= 0; --i) {  // descending eigenvalues
        const double lam = es.eigenvalues()[i];
        if (lam <= threshold) break;
        const double comp = es.eigenvectors().col(i).dot(dev);
        dist2 += comp * comp / lam;
        inr += comp * comp;
        if (dir_components.size() <= dir_index) dir_components.emplace_back();
        dir_components[dir_index].push_back(comp / std::sqrt(lam));
        ++dir_index;
      }
      whitened_dist.push_back(dist2);
      in_energy.push_back(inr);
      out_energy.push_back(dev.squaredNorm() - inr);

      fgap_samples.push_back(f_gap_sample(*problem, last, t.limit_estimate));
    }

    thetas.push_back(last.distance);
    if (!last.drift_censored) {
      drifts.push_back(last.tangential_drift);
      drift_bounds.push_back(last.drift_bound);
    } else {
      ++rep.drift_censored;
    }
  }

  const ToleranceSet& tol = cfg.tolerances;
  rep.checks.push_back(check_at_most(
      "exclusion_ratio",
      static_cast<double>(rep.excluded) / static_cast<double>(rep.total),
      tol.exclusion_ceiling));
  rep.invalid = !rep.checks.back().pass;

  if (rep.included >= 2) {
    rep.empirical_cov = empirical_covariance(devs_final);
  } else {
    rep.empirical_cov = Mat::Zero(d, d);
  }

  if (!rep.degenerate_noise && sigma_count > 0 && rep.included >= 2) {
    rep.sigma_theory = sigma_sum / static_cast<double>(sigma_count);
    rep.frobenius_rel = frobenius_rel_err(rep.empirical_cov, rep.sigma_theory);
    rep.checks.push_back(
        check_at_most("covariance_frobenius", rep.frobenius_rel, tol.frobenius_rel));

    // whitened chi-square test; dof = per-replication sigma rank
    int dof = static_cast<int>(dir_components.size());
    MahalanobisReport mr;
    mr.dof = dof;
    mr.count = whitened_dist.size();
    mr.mean_in_range = mean_of(in_energy);
    mr.mean_out_of_range = mean_of(out_energy);
    mr.statistic = ks_chi_squared(whitened_dist, dof);
    rep.mahalanobis = mr;
    rep.whitened_distances = whitened_dist;
    rep.checks.push_back(
        check_at_most("whitened_mahalanobis_ks", mr.statistic,
                      ks_critical_value(mr.count, tol.ks_alpha)));

    rep.tangential_energy_ratio =
        (mr.mean_in_range > 0.0) ? mr.mean_out_of_range / mr.mean_in_range : 0.0;
    rep.checks.push_back(check_at_most("tangential_energy_ratio",
                                       rep.tangential_energy_ratio,
                                       tol.tangential_energy_ratio));

    for (auto& comps : dir_components) {
      rep.direction_ks.push_back(ks_normal(comps));
      for (double c : comps) rep.qq_standardized.push_back(c);
    }

    // mean predicted spectrum, position-wise over replications
    if (!spectra.empty()) {
      const std::size_t width = spectra.front().size();
      rep.f_gap_spectrum.assign(width, 0.0);
      for (const auto& s : spectra) {
        for (std::size_t i = 0; i < width && i < s.size(); ++i) {
          rep.f_gap_spectrum[i] += s[i];
        }
      }
      for (double& v : rep.f_gap_spectrum) {
        v /= static_cast<double>(spectra.size());
      }
    }
    if (!fgap_samples.empty() && !rep.f_gap_spectrum.empty()) {
      rep.f_gap = f_gap_check(fgap_samples, rep.f_gap_spectrum);
      rep.checks.push_back(
          check_at_most("f_gap_mean", rep.f_gap.mean_rel_err, tol.fgap_mean_rel));
      rep.checks.push_back(check_at_most("f_gap_variance",
                                         rep.f_gap.variance_rel_err,
                                         tol.fgap_var_rel));
    }
  }

  for (std::size_t k = 0; k < num_h; ++k) {
    RatePoint pt;
    pt.n = cfg.horizons[k];
    const auto& samples = dist_sq_by_horizon[k];
    if (!samples.empty()) {
      pt.mean_sq_dist = mean_of(samples);
      if (samples.size() > 1) {
        double ss = 0.0;
        for (double v : samples) {
          ss += (v - pt.mean_sq_dist) * (v - pt.mean_sq_dist);
        }
        pt.stderr_mean = std::sqrt(ss / static_cast<double>(samples.size() - 1)) /
                         std::sqrt(static_cast<double>(samples.size()));
      }
    }
    rep.rate_points.push_back(pt);
  }
  if (rep.rate_points.size() >= 3 && !rep.degenerate_noise) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& pt : rep.rate_points) {
      if (pt.mean_sq_dist > 0.0) {
        pts.emplace_back(static_cast<double>(pt.n), pt.mean_sq_dist);
      }
    }
    if (pts.size() >= 3) {
      rep.rate = rate_fit(pts);
      rep.checks.push_back(check_at_most(
          "rate_slope_abs_err", std::abs(rep.rate.slope + cfg.schedule.gamma_exp),
          tol.rate_slope_abs));
    }
  }

  rep.drift_mean = mean_of(drifts);
  rep.drift_bound_mean = mean_of(drift_bounds);
  rep.theta_mean = mean_of(thetas);
  if (rep.theta_mean > 0.0 && !drifts.empty()) {
    rep.drift_theta_ratio = rep.drift_mean / rep.theta_mean;
    if (problem->manifold_dim() > 0 && !rep.degenerate_noise) {
      rep.checks.push_back(check_at_least("drift_vs_theta_ratio",
                                          rep.drift_theta_ratio,
                                          tol.drift_ratio_min));
    }
  }

  return rep;
}

RhoSweepReport run_rho_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_rhos.empty()) {
    throw ConfigError("rho sweep: sweep_rhos must not be empty");
  }
  RhoSweepReport rep;
  rep.total = cfg.replications;

  ExperimentConfig base = cfg;
  base.schedule.rho = cfg.sweep_rhos.front();
  gate_assumptions(base);

  auto problem = make_problem(cfg.problem);
  SimulationConfig sim = make_sim(base, problem);
  sim.track_drift = false;
  sim.extra_weight_exponents.assign(cfg.sweep_rhos.begin() + 1, cfg.sweep_rhos.end());

  const auto outcomes =
      run_replications(sim, cfg.master_seed, cfg.replications, cfg.workers);

  const std::size_t num_rho = cfg.sweep_rhos.size();
  std::vector<std::vector<Vec>> devs(num_rho);
  const std::uint64_t n_final = cfg.horizons.back();
  const double root_n = std::sqrt(static_cast<double>(n_final));

  for (const auto& oc : outcomes) {
    const Trajectory& t = oc.traj;
    if (oc.diverged || !t.converged) continue;
    const HorizonSnapshot& last = t.snapshots.back();
    if (last.projection_valid) {
      devs[0].push_back(rescaled_deviation(last));
    }
    for (std::size_t j = 0; j < t.sweep.size(); ++j) {
      const SweepAverage& sw = t.sweep[j];
      if (sw.projection_valid) {
        devs[j + 1].push_back(root_n * (sw.average - sw.average_projection));
      }
    }
  }
  rep.included = devs[0].size();
  {
    const double ratio = 1.0 - static_cast<double>(rep.included) /
                                   static_cast<double>(rep.total);
    rep.checks.push_back(
        check_at_most("exclusion_ratio", ratio, cfg.tolerances.exclusion_ceiling));
    rep.invalid = !rep.checks.back().pass;
  }

  const double base_c2 = c_rho(cfg.sweep_rhos.front()) * c_rho(cfg.sweep_rhos.front());
  double base_trace = 0.0;
  for (std::size_t j = 0; j < num_rho; ++j) {
    RhoPoint pt;
    pt.rho = cfg.sweep_rhos[j];
    pt.samples = devs[j].size();
    if (devs[j].size() >= 2) {
      pt.trace_measured = empirical_covariance(devs[j]).trace();
    }
    if (j == 0) base_trace = pt.trace_measured;
    pt.trace_ratio = (base_trace > 0.0) ? pt.trace_measured / base_trace : 0.0;
    pt.predicted_ratio = c_rho(pt.rho) * c_rho(pt.rho) / base_c2;
    rep.points.push_back(pt);
  }

  // measured argmin vs predicted argmin of the weight factor
  double best_trace = std::numeric_limits<double>::infinity();
  for (const auto& pt : rep.points) {
    if (pt.trace_measured < best_trace) {
      best_trace = pt.trace_measured;
      rep.argmin_rho = pt.rho;
    }
  }
  double predicted_argmin = rep.points.front().rho;
  double best_c = std::numeric_limits<double>::infinity();
  for (const auto& pt : rep.points) {
    const double c2 = c_rho(pt.rho) * c_rho(pt.rho);
    if (c2 < best_c) {
      best_c = c2;
      predicted_argmin = pt.rho;
    }
  }

  for (std::size_t j = 1; j < num_rho; ++j) {
    const RhoPoint& pt = rep.points[j];
    const double rel =
        std::abs(pt.trace_ratio - pt.predicted_ratio) / pt.predicted_ratio;
    rep.checks.push_back(check_at_most(
        "trace_ratio_rho_" + std::to_string(pt.rho), rel, cfg.tolerances.rho_trace_rel));
  }
  {
    CheckOutcome c;
    c.name = "argmin_at_predicted_optimum";
    c.measured = rep.argmin_rho;
    c.tolerance = predicted_argmin;
    c.margin = 0.0;
    c.pass = rep.argmin_rho == predicted_argmin;
    rep.checks.push_back(c);
  }
  return rep;
}

RateReport run_rate_experiment(const ExperimentConfig& cfg) {
  RateReport rep;
  auto problem = make_problem(cfg.problem);
  for (double gamma_exp : cfg.rate_gammas) {
    ExperimentConfig sub = cfg;
    sub.schedule.gamma_exp = gamma_exp;
    gate_assumptions(sub);
    SimulationConfig sim = make_sim(sub, problem);
    sim.track_drift = false;

    const auto outcomes =
        run_replications(sim, cfg.master_seed, cfg.replications, cfg.workers);

    RateCase rc;
    rc.gamma_exp = gamma_exp;
    const std::size_t num_h = cfg.horizons.size();
    std::vector<std::vector<double>> dist_sq(num_h);
    for (const auto& oc : outcomes) {
      if (oc.diverged || !oc.traj.converged) {
        ++rc.excluded;
        continue;
      }
      ++rc.included;
      for (std::size_t k = 0; k < num_h; ++k) {
        const auto& snap = oc.traj.snapshots[k];
        dist_sq[k].push_back(snap.distance * snap.distance);
      }
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < num_h; ++k) {
      RatePoint pt;
      pt.n = cfg.horizons[k];
      pt.mean_sq_dist = mean_of(dist_sq[k]);
      if (dist_sq[k].size() > 1) {
        double ss = 0.0;
        for (double v : dist_sq[k]) {
          ss += (v - pt.mean_sq_dist) * (v - pt.mean_sq_dist);
        }
        pt.stderr_mean =
            std::sqrt(ss / static_cast<double>(dist_sq[k].size() - 1)) /
            std::sqrt(static_cast<double>(dist_sq[k].size()));
      }
      rc.points.push_back(pt);
      if (pt.mean_sq_dist > 0.0) {
        pts.emplace_back(static_cast<double>(pt.n), pt.mean_sq_dist);
      }
    }
    if (pts.size() >= 3) rc.fit = rate_fit(pts);
    rep.cases.push_back(rc);
    rep.checks.push_back(check_at_most(
        "rate_slope_gamma_" + std::to_string(gamma_exp),
        std::abs(rc.fit.slope + gamma_exp), cfg.tolerances.rate_slope_abs));
  }
  return rep;
}

OracleReport run_linear_oracle(const ExperimentConfig& cfg) {
  OracleReport rep;
  std::vector<OracleCase> cases = cfg.oracle.cases;
  if (cases.empty()) {
    OracleCase scalar;
    scalar.name = "scalar";
    scalar.h = {{-2.0}};
    scalar.gamma_theta = {{1.0}};
    OracleCase mat2;
    mat2.name = "matrix2";
    mat2.h = {{-2.0, 0.3}, {0.3, -1.0}};
    mat2.gamma_theta = {{1.0, 0.2}, {0.2, 0.5}};
    cases = {scalar, mat2};
  }

  const double sigma = sigma_n(cfg.oracle.horizon, cfg.schedule);

  std::uint64_t case_index = 0;
  for (const auto& oc : cases) {
    const auto d = static_cast<int>(oc.h.size());
    Mat h(d, d), gt(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        h(i, j) = oc.h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        gt(i, j) =
            oc.gamma_theta[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    ProductMatrices pm(h, cfg.schedule);

    OracleCaseReport cr;
    cr.name = oc.name;
    cr.limit_cov = pm.limit_covariance(gt);

    const std::uint64_t draw_seed =
        detail::mix64(cfg.master_seed + 0x9d8f3c2b1aull + case_index);
    std::vector<Vec> draws = pm.simulate_draws(cfg.oracle.horizon, gt, draw_seed,
                                               cfg.oracle.draws, cfg.workers);
    for (auto& v : draws) v /= sigma;
    cr.empirical_cov = empirical_covariance(draws);
    cr.frobenius_rel = frobenius_rel_err(cr.empirical_cov, cr.limit_cov);
    cr.limit_residual = pm.limit_residual(cfg.oracle.limit_check_l,
                                          cfg.oracle.limit_check_n);
    for (std::uint64_t n : cfg.oracle.sweep_horizons) {
      cr.sweep.push_back(
          OracleSweepPoint{n, pm.max_weighted_norm(cfg.oracle.limit_check_l, n)});
    }

    rep.checks.push_back(check_at_most("oracle_cov_" + cr.name, cr.frobenius_rel,
                                       cfg.tolerances.oracle_cov_rel));
    rep.checks.push_back(check_at_most("oracle_limit_residual_" + cr.name,
                                       cr.limit_residual,
                                       cfg.tolerances.oracle_limit_residual));
    if (cr.sweep.size() >= 2) {
      double lo = cr.sweep.front().max_weighted_norm;
      double hi = lo;
      for (const auto& pt : cr.sweep) {
        lo = std::min(lo, pt.max_weighted_norm);
        hi = std::max(hi, pt.max_weighted_norm);
      }
      rep.checks.push_back(
          check_at_most("oracle_sweep_stability_" + cr.name, hi / lo - 1.0, 0.05));
    }
    rep.cases.push_back(std::move(cr));
    ++case_index;
  }
  return rep;
}

FeasibleRegionReport feasible_region(const RegularityTriple& r,
                                     std::optional<double> gamma_exp,
                                     std::optional<double> rho) {
  FeasibleRegionReport rep;
  rep.regularity = r;
  rep.gamma_interval = feasible_gamma_interval(r);

  char buf[256];
  std::snprintf(buf, sizeof(buf), "gamma interval: (%.6g, %.6g)\n",
                rep.gamma_interval.lower, rep.gamma_interval.upper);
  rep.rendered += buf;

  if (gamma_exp) {
    rep.has_rho = true;
    rep.gamma_used = *gamma_exp;
    rep.rho_interval = feasible_rho_interval(*gamma_exp, r);
    std::snprintf(buf, sizeof(buf), "rho interval: (%.6g, inf) at gamma=%.6g\n",
                  rep.rho_interval.lower, *gamma_exp);
    rep.rendered += buf;
    if (rho) {
      rep.has_beta = true;
      rep.rho_used = *rho;
      ScheduleParams p;
      p.gamma_exp = *gamma_exp;
      p.rho = *rho;
      rep.beta_interval = feasible_beta_interval(p, r);
      if (rep.beta_interval.empty()) {
        std::snprintf(buf, sizeof(buf),
                      "beta interval: empty (infeasible) at gamma=%.6g rho=%.6g\n",
                      *gamma_exp, *rho);
      } else {
        std::snprintf(buf, sizeof(buf),
                      "beta interval: (%.6g, %.6g) at gamma=%.6g rho=%.6g\n",
                      rep.beta_interval.lower, rep.beta_interval.upper, *gamma_exp,
                      *rho);
      }
      rep.rendered += buf;
    }
  }
  return rep;
}

}  // namespace sgdlab
