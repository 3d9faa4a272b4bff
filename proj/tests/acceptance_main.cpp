// Acceptance suite: one pass/fail line per criterion, each at its pinned
// tolerance. Informational lines (marked "info") do not gate the exit code;
// they carry the window-calibrated diagnostics that factor out the exact
// finite-horizon averaging scale n * sigma_n^2 / c(rho)^2 where the pinned
// tolerance sits inside that factor.
//
// Exit code: number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "sgdlab/artifacts.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/linear_oracle.hpp"
#include "sgdlab/runner.hpp"

using namespace sgdlab;

namespace {

int failures = 0;

void line(const std::string& tag, bool pass, const std::string& detail,
          bool informational = false) {
  std::printf("[%s] %-46s %s\n",
              informational ? (pass ? "info" : "INFO") : (pass ? "PASS" : "FAIL"),
              tag.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass && !informational) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

constexpr std::uint64_t kSeed = 20260808;

ExperimentConfig base_config() {
  ExperimentConfig c;
  c.schedule.c_gamma = 1.0;
  c.schedule.gamma_exp = 0.8;
  c.schedule.rho = 0.0;
  c.schedule.beta = 0.9;
  c.noise.kind = "gaussian_iid";
  c.noise.gamma.identity_scale = 1.0;
  c.master_seed = kSeed;
  c.horizons = {1000, 3162, 10000, 31623, 100000};
  c.initial_distance = 0.1;
  c.workers = 1;
  return c;
}

ExperimentConfig flat_config() {
  ExperimentConfig c = base_config();
  c.problem.kind = "flat_quadratic";
  c.problem.manifold_dim = 1;
  c.problem.quadratic_diag = {1.0, 2.0};
  c.replications = 2000;
  c.out_dir = "acceptance_out/clt_flat";
  return c;
}

ExperimentConfig sphere_config() {
  ExperimentConfig c = base_config();
  c.problem.kind = "sphere_well";
  c.problem.dim = 2;
  c.replications = 2000;
  // The quartic well escapes with positive probability under unit noise and
  // gamma_1 = 1; the law under test conditions on convergence, so excluded
  // replications are the conditioning event, not an error.
  c.tolerances.exclusion_ceiling = 0.30;
  c.out_dir = "acceptance_out/clt_sphere";
  return c;
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

// --------------------------------------------------------------------------

static void criterion_1(const CltReport& flat) {
  Mat sigma = Mat::Zero(3, 3);
  sigma(1, 1) = 1.0;
  sigma(2, 2) = 0.25;
  const double frob = frobenius_rel_err(flat.empirical_cov, sigma);
  line("criterion 1: coefficient law, flat valley", frob <= 0.15,
       fmt("frobenius=%.4f tolerance=0.15 (R=%llu incl=%llu)", frob,
           (unsigned long long)flat.total, (unsigned long long)flat.included));
  const double frob_cal =
      frobenius_rel_err(flat.empirical_cov, flat.window_variance_factor * sigma);
  line("criterion 1: window-calibrated covariance", frob_cal <= 0.15,
       fmt("frobenius=%.4f vs factor %.4f * Sigma", frob_cal,
           flat.window_variance_factor),
       true);
}

static void criterion_2(const CltReport& sphere) {
  const double band = ks_critical_value(sphere.mahalanobis.count, 0.01);
  const bool ks_ok = sphere.mahalanobis.statistic <= band;
  const bool energy_ok = sphere.tangential_energy_ratio <= 0.10;
  line("criterion 2: curved-manifold law, sphere", ks_ok && energy_ok,
       fmt("whitened KS=%.4f band=%.4f (dof=%d) energy_ratio=%.5f<=0.10 "
           "excl=%llu/%llu",
           sphere.mahalanobis.statistic, band, sphere.mahalanobis.dof,
           sphere.tangential_energy_ratio,
           (unsigned long long)sphere.excluded,
           (unsigned long long)sphere.total));
  // exact finite-horizon scale removed
  std::vector<double> calibrated = sphere.whitened_distances;
  for (double& v : calibrated) v /= sphere.window_variance_factor;
  const double ks_cal = ks_chi_squared(calibrated, sphere.mahalanobis.dof);
  line("criterion 2: window-calibrated whitening", ks_cal <= band,
       fmt("KS=%.4f band=%.4f after removing factor %.4f", ks_cal, band,
           sphere.window_variance_factor),
       true);
}

static void criterion_3(const CltReport& flat, const CltReport& sphere) {
  const bool flat_ok =
      flat.f_gap.mean_rel_err <= 0.15 && flat.f_gap.variance_rel_err <= 0.30;
  const bool sphere_ok = sphere.f_gap.mean_rel_err <= 0.15 &&
                         sphere.f_gap.variance_rel_err <= 0.30;
  line("criterion 3: performance law moments", flat_ok && sphere_ok,
       fmt("flat mean=%.4f vs 1.5 (rel %.3f<=0.15) var=%.4f vs 2.5 (rel "
           "%.3f<=0.30); sphere mean=%.4f vs 0.5 (rel %.3f) var=%.4f vs 0.5 "
           "(rel %.3f)",
           flat.f_gap.sample_mean, flat.f_gap.mean_rel_err,
           flat.f_gap.sample_variance, flat.f_gap.variance_rel_err,
           sphere.f_gap.sample_mean, sphere.f_gap.mean_rel_err,
           sphere.f_gap.sample_variance, sphere.f_gap.variance_rel_err));
  const double k = flat.window_variance_factor;
  const double mean_cal = std::abs(flat.f_gap.sample_mean / k - 1.5) / 1.5;
  const double var_cal =
      std::abs(flat.f_gap.sample_variance / (k * k) - 2.5) / 2.5;
  const double ks = sphere.window_variance_factor;
  const double s_mean_cal = std::abs(sphere.f_gap.sample_mean / ks - 0.5) / 0.5;
  const double s_var_cal =
      std::abs(sphere.f_gap.sample_variance / (ks * ks) - 0.5) / 0.5;
  line("criterion 3: window-calibrated moments",
       mean_cal <= 0.15 && var_cal <= 0.30 && s_mean_cal <= 0.15 &&
           s_var_cal <= 0.30,
       fmt("factor %.4f removed: flat mean rel=%.3f var rel=%.3f, sphere "
           "mean rel=%.3f var rel=%.3f",
           k, mean_cal, var_cal, s_mean_cal, s_var_cal),
       true);
}

static void criterion_4() {
  ExperimentConfig c = flat_config();
  c.replications = 1200;
  c.sweep_rhos = {0.0, 0.5, 1.0};
  c.out_dir = "acceptance_out/rho_sweep";
  const auto t0 = std::chrono::steady_clock::now();
  const RhoSweepReport rep = run_rho_sweep(c);
  write_run_artifacts(c, to_json_text(rep), {}, elapsed(t0));

  bool ratios_ok = true;
  std::string detail;
  for (std::size_t j = 1; j < rep.points.size(); ++j) {
    const auto& pt = rep.points[j];
    const double rel =
        std::abs(pt.trace_ratio - pt.predicted_ratio) / pt.predicted_ratio;
    ratios_ok = ratios_ok && rel <= 0.20;
    detail += fmt("rho=%.1f ratio=%.4f vs %.4f (rel %.3f) ", pt.rho,
                  pt.trace_ratio, pt.predicted_ratio, rel);
  }
  const bool argmin_ok = rep.argmin_rho == 0.0;
  line("criterion 4: weight-exponent sweep", ratios_ok && argmin_ok,
       detail + fmt("argmin=%.1f", rep.argmin_rho));
}

static void criterion_5() {
  ExperimentConfig c = flat_config();
  c.replications = 500;
  c.rate_gammas = {0.75, 0.8, 0.9};
  c.force = true;  // gamma = 0.75 sits on the open feasibility boundary
  c.out_dir = "acceptance_out/rate";
  const auto t0 = std::chrono::steady_clock::now();
  const RateReport rep = run_rate_experiment(c);
  write_run_artifacts(c, to_json_text(rep), {}, elapsed(t0));

  bool ok = true;
  std::string detail;
  for (const auto& rc : rep.cases) {
    const double err = std::abs(rc.fit.slope + rc.gamma_exp);
    ok = ok && err <= 0.10;
    detail += fmt("gamma=%.2f slope=%.4f ", rc.gamma_exp, rc.fit.slope);
  }
  line("criterion 5: distance-decay rate", ok, detail + "tolerance +-0.10");
}

static void criterion_6() {
  ExperimentConfig c = base_config();
  c.replications = 0;
  c.oracle.draws = 5000;
  c.oracle.horizon = 100000;
  c.oracle.limit_check_l = 1000;
  c.oracle.limit_check_n = 1000000;
  c.oracle.sweep_horizons = {10000, 100000, 1000000};
  c.out_dir = "acceptance_out/linear_oracle";
  const auto t0 = std::chrono::steady_clock::now();
  const OracleReport rep = run_linear_oracle(c);
  write_run_artifacts(c, to_json_text(rep), {}, elapsed(t0));

  bool cov_ok = true;
  bool residual_ok = true;
  std::string detail;
  for (const auto& cr : rep.cases) {
    cov_ok = cov_ok && cr.frobenius_rel <= 0.10;
    residual_ok = residual_ok && cr.limit_residual <= 0.01;
    detail += fmt("%s cov=%.4f res=%.4f ", cr.name.c_str(), cr.frobenius_rel,
                  cr.limit_residual);
  }
  line("criterion 6: linear averaged-system oracle", cov_ok && residual_ok,
       detail + "(cov<=0.10, residual<=0.01 at l=1e3,n=1e6)");

  // The window-sum limit takes the window start to infinity as well; along
  // the diagonal the residual does fall below the pinned threshold.
  Mat h(1, 1);
  h(0, 0) = -2.0;
  ProductMatrices pm(h, c.schedule);
  const double diag_res = pm.limit_residual(10000000, 100000000);
  line("criterion 6: window-sum limit along the diagonal", diag_res <= 0.01,
       fmt("residual=%.4f at l=1e7, n=1e8 (fixed l=1e3 floor is ~0.054)",
           diag_res),
       true);
}

static void criterion_7() {
  RegularityTriple r;
  r.alpha_f = 0.5;
  r.alpha_phi = 1.0;
  r.alpha_psi = 2.0 / 3.0;
  const auto rep = feasible_region(r, std::nullopt, std::nullopt);
  const bool interval_ok = std::abs(rep.gamma_interval.lower - 0.75) <= 1e-12 &&
                           rep.gamma_interval.upper == 1.0;
  const bool printed_ok = rep.rendered.find("(0.75, 1)") != std::string::npos;

  RegularityTriple ones;
  const auto full = feasible_region(ones, 0.8, 0.0);
  const bool beta_ok = std::abs(full.beta_interval.lower - 5.0 / 6.0) <= 1e-12;

  line("criterion 7: feasibility region", interval_ok && printed_ok && beta_ok,
       fmt("gamma interval (%.6g, %.6g), beta lower %.6f (5/6)",
           rep.gamma_interval.lower, rep.gamma_interval.upper,
           full.beta_interval.lower));
}

static void criterion_8() {
  // Deterministic invariant suite (no Monte Carlo): derivative checks,
  // projection facts, both contraction inequalities, averaging against the
  // naive sum, window sums against the literal definition, config
  // round-trip, and parallel/serial report equality.
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string why;

  auto expect = [&](bool cond, const char* what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  };

  std::vector<std::shared_ptr<const Problem>> problems;
  {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 2.0;
    problems.push_back(make_flat_quadratic(1, a));
    problems.push_back(make_sphere_well(2));
    problems.push_back(make_hyperbola(1.0));
  }
  for (const auto& prob : problems) {
    StepRng rng(0xacce97ull);
    for (int s = 0; s < 200; ++s) {
      const double dist = 0.8 * prob->tube().radius * rng.next_uniform();
      const Vec x = prob->sample_tube_point(rng, dist);
      // gradient against central differences
      Vec fd(prob->dim());
      for (int i = 0; i < prob->dim(); ++i) {
        Vec hi = x, lo = x;
        hi[i] += 1e-5;
        lo[i] -= 1e-5;
        fd[i] = (prob->objective(hi) - prob->objective(lo)) / 2e-5;
      }
      const Vec g = prob->gradient(x);
      expect((g - fd).norm() <= 1e-6 * (1.0 + g.norm()), "gradient fd");
      // projection facts
      const Vec m = prob->project(x);
      expect((prob->project(m) - m).norm() <= 1e-10, "projection idempotence");
      const Mat pi = normal_projector(*prob, m);
      expect(((Mat::Identity(prob->dim(), prob->dim()) - pi) * (x - m)).norm() <=
                 1e-9,
             "residual orthogonality");
      // contraction of the distance and of normal vectors
      const double gam = 1.0 / prob->bound();
      expect(prob->distance(x + gam * prob->gradient(x)) <=
                 (1.0 - gam * 0.5 * prob->stability()) * prob->distance(x) + 1e-12,
             "distance contraction");
      const Vec v = prob->random_unit_normal(m, rng);
      expect((v + gam * prob->hessian(m) * v).norm() <=
                 (1.0 - gam * prob->stability()) + 1e-12,
             "normal contraction");
    }
  }

  // averaging against the naive weighted sum
  {
    auto prob = make_sphere_well(2);
    SimulationConfig sim;
    sim.problem = prob;
    sim.schedule = ScheduleParams{1.0, 0.8, 0.0, 0.9};
    sim.noise = NoiseModel(NoiseKind::gaussian_iid, 0.04 * Mat::Identity(2, 2));
    sim.horizons = {1000};
    const Trajectory t = run_replication(sim, kSeed, 0);
    RngStream stream(kSeed, 0);
    StepRng init = stream.at_step(0);
    Vec x = prob->sample_tube_point(init, sim.initial_distance);
    Vec num = Vec::Zero(2);
    double den = 0.0;
    const std::uint64_t n0 = burn_in(1000, 0.9);
    for (std::uint64_t n = 1; n <= 1000; ++n) {
      x = rm_step(x, n, *prob, sim.schedule, sim.noise, stream);
      if (n > n0) {
        num += x;
        den += 1.0;
      }
    }
    expect((t.snapshots[0].average - num / den).norm() <=
               1e-12 * (num / den).norm(),
           "prefix-sum averaging");
  }

  // window sums against the literal definition
  {
    Mat h(2, 2);
    h << -2.0, 0.3, 0.3, -1.0;
    const ScheduleParams sched{1.0, 0.8, 0.0, 0.9};
    ProductMatrices pm(h, sched);
    Mat direct = Mat::Zero(2, 2);
    for (std::uint64_t r = 30; r <= 80; ++r) {
      Mat prod = Mat::Identity(2, 2);
      for (std::uint64_t s2 = 31; s2 <= r; ++s2) {
        prod = (Mat::Identity(2, 2) + step_size(s2, sched) * h) * prod;
      }
      direct += step_size(30, sched) * prod;
    }
    expect((pm.weighted_sum(30, 80) - direct).cwiseAbs().maxCoeff() <=
               1e-12 * direct.cwiseAbs().maxCoeff(),
           "window-sum definition");
  }

  // config round-trip and parallel/serial equality
  {
    ExperimentConfig c = flat_config();
    c.replications = 12;
    c.horizons = {400, 1000, 2000};
    c.tube_check_from = 60;
    c.out_dir = "acceptance_out/tmp";
    expect(ExperimentConfig::from_json_text(c.to_json_text()).to_json_text() ==
               c.to_json_text(),
           "config round-trip");
    const CltReport serial = run_clt_experiment(c);
    ExperimentConfig par = c;
    par.workers = 4;
    const CltReport threaded = run_clt_experiment(par);
    expect(to_json_text(serial) == to_json_text(threaded),
           "parallel/serial report equality");
    expect(deviations_csv(serial) == deviations_csv(threaded),
           "parallel/serial deviations equality");
  }

  line("criterion 8: deterministic invariant suite", ok,
       ok ? fmt("all exact checks hold (%.1fs)", elapsed(t0))
          : "first failure: " + why);
}

static void criterion_9(const CltReport& sphere, bool criterion2_pass) {
  const bool ratio_ok = sphere.drift_theta_ratio >= 3.0;
  line("criterion 9: tangential/normal scale separation",
       ratio_ok && criterion2_pass,
       fmt("mean drift=%.5f mean |theta|=%.5f ratio=%.2f>=3, criterion 2 %s "
           "(censored=%llu)",
           sphere.drift_mean, sphere.theta_mean, sphere.drift_theta_ratio,
           criterion2_pass ? "holds" : "does not hold",
           (unsigned long long)sphere.drift_censored));
}

int main() {
  std::filesystem::create_directories("acceptance_out");
  const auto t0 = std::chrono::steady_clock::now();

  std::printf("== acceptance suite (seed %llu) ==\n",
              (unsigned long long)kSeed);

  // shared runs: flat for criteria 1 and 3, sphere for criteria 2, 3 and 9
  ExperimentConfig flat_cfg = flat_config();
  auto t = std::chrono::steady_clock::now();
  const CltReport flat = run_clt_experiment(flat_cfg);
  write_run_artifacts(flat_cfg, to_json_text(flat),
                      {{"deviations.csv", deviations_csv(flat)},
                       {"rates.csv", rates_csv(flat.rate_points)},
                       {"qq.csv", qq_csv(flat)}},
                      elapsed(t));
  std::printf("-- flat run: %.1fs\n", elapsed(t));

  ExperimentConfig sphere_cfg = sphere_config();
  t = std::chrono::steady_clock::now();
  const CltReport sphere = run_clt_experiment(sphere_cfg);
  write_run_artifacts(sphere_cfg, to_json_text(sphere),
                      {{"deviations.csv", deviations_csv(sphere)},
                       {"rates.csv", rates_csv(sphere.rate_points)},
                       {"qq.csv", qq_csv(sphere)}},
                      elapsed(t));
  std::printf("-- sphere run: %.1fs\n", elapsed(t));

  criterion_1(flat);
  const double band2 = ks_critical_value(sphere.mahalanobis.count, 0.01);
  const bool crit2 = sphere.mahalanobis.statistic <= band2 &&
                     sphere.tangential_energy_ratio <= 0.10;
  criterion_2(sphere);
  criterion_3(flat, sphere);
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9(sphere, crit2);

  std::printf("== %d criterion failure(s), %.1fs total ==\n", failures,
              elapsed(t0));
  return failures;
}
