#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgdlab/artifacts.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/runner.hpp"

using namespace sgdlab;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.problem.kind = "flat_quadratic";
  cfg.problem.manifold_dim = 1;
  cfg.problem.quadratic_diag = {1.0, 2.0};
  cfg.schedule.c_gamma = 1.0;
  cfg.schedule.gamma_exp = 0.8;
  cfg.schedule.rho = 0.0;
  cfg.schedule.beta = 0.9;
  cfg.noise.kind = "gaussian_iid";
  cfg.noise.gamma.identity_scale = 1.0;
  cfg.replications = 12;
  cfg.master_seed = 424242;
  cfg.horizons = {400, 1000, 2000};
  cfg.initial_distance = 0.05;
  cfg.tube_check_from = 60;
  cfg.workers = 1;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "sgdlab_test_out").string();
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("config round-trips through json") {
  ExperimentConfig cfg = small_config();
  cfg.final_distance_max = 0.3;
  cfg.sweep_rhos = {0.0, 0.5, 1.0};
  cfg.rate_gammas = {0.75, 0.8};
  cfg.oracle.cases.push_back(OracleCase{});
  const std::string text = cfg.to_json_text();
  const ExperimentConfig back = ExperimentConfig::from_json_text(text);
  CHECK(back.to_json_text() == text);
  CHECK(back.problem.quadratic_diag == cfg.problem.quadratic_diag);
  CHECK(back.schedule.gamma_exp == cfg.schedule.gamma_exp);
  CHECK(back.tube_check_from == cfg.tube_check_from);
  CHECK(back.final_distance_max == cfg.final_distance_max);
  CHECK(back.master_seed == cfg.master_seed);

  // full matrices survive too
  ExperimentConfig mcfg = small_config();
  mcfg.noise.gamma.identity_scale.reset();
  mcfg.noise.gamma.matrix = {{1.0, 0.25, 0.0}, {0.25, 1.0, 0.0}, {0.0, 0.0, 0.5}};
  const ExperimentConfig mback =
      ExperimentConfig::from_json_text(mcfg.to_json_text());
  CHECK(mback.to_json_text() == mcfg.to_json_text());
  CHECK(mback.noise.gamma.matrix == mcfg.noise.gamma.matrix);

  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{not json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{}"), ConfigError);
}

TEST_CASE("feasibility gate") {
  ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(gate_assumptions(cfg));

  cfg.schedule.gamma_exp = 0.75;  // boundary: strict inequality fails
  CHECK_THROWS_AS(gate_assumptions(cfg), ConfigError);
  cfg.force = true;
  CHECK_NOTHROW(gate_assumptions(cfg));
}

TEST_CASE("feasible region report") {
  RegularityTriple r;
  r.alpha_f = 0.5;
  r.alpha_phi = 1.0;
  r.alpha_psi = 2.0 / 3.0;
  const auto rep = feasible_region(r, std::nullopt, std::nullopt);
  CHECK(rep.gamma_interval.lower == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(rep.rendered.find("(0.75, 1)") != std::string::npos);

  RegularityTriple ones;
  const auto full = feasible_region(ones, 0.8, 0.0);
  CHECK(full.beta_interval.lower == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(full.rho_interval.lower == doctest::Approx(-0.2).epsilon(1e-12));

  RegularityTriple bad;
  bad.alpha_psi = 0.5;
  CHECK_THROWS_WITH_AS(feasible_region(bad, std::nullopt, std::nullopt),
                       doctest::Contains("interval may be empty"),
                       std::invalid_argument);
}

TEST_CASE("clt experiment smoke run and artifacts") {
  ExperimentConfig cfg = small_config();
  cfg.out_dir += "_clt";
  const CltReport rep = run_clt_experiment(cfg);
  CHECK(rep.total == 12);
  CHECK(rep.included + rep.excluded == 12);
  CHECK(rep.included >= 10);
  CHECK(rep.empirical_cov.rows() == 3);
  CHECK(rep.sigma_theory(1, 1) == doctest::Approx(1.0));
  CHECK(rep.sigma_theory(2, 2) == doctest::Approx(0.25));
  CHECK_FALSE(rep.degenerate_noise);

  const std::string report_json = to_json_text(rep);
  write_run_artifacts(cfg, report_json,
                      {{"deviations.csv", deviations_csv(rep)},
                       {"rates.csv", rates_csv(rep.rate_points)},
                       {"qq.csv", qq_csv(rep)}},
                      1.25);
  namespace fs = std::filesystem;
  for (const char* name : {"config.json", "report.json", "deviations.csv",
                           "rates.csv", "qq.csv", "manifest.json"}) {
    CHECK(fs::exists(fs::path(cfg.out_dir) / name));
  }
  std::string error;
  CHECK(verify_manifest(cfg.out_dir, &error));

  // tampering breaks verification
  {
    std::ofstream out(fs::path(cfg.out_dir) / "rates.csv", std::ios::app);
    out << "tampered\n";
  }
  CHECK_FALSE(verify_manifest(cfg.out_dir, &error));
  CHECK(error.find("rates.csv") != std::string::npos);
}

TEST_CASE("reports are byte-identical across runs and worker counts") {
  ExperimentConfig cfg = small_config();
  cfg.replications = 10;
  const CltReport serial_a = run_clt_experiment(cfg);
  const CltReport serial_b = run_clt_experiment(cfg);
  CHECK(to_json_text(serial_a) == to_json_text(serial_b));
  CHECK(deviations_csv(serial_a) == deviations_csv(serial_b));

  ExperimentConfig par = cfg;
  par.workers = 4;
  const CltReport threaded = run_clt_experiment(par);
  CHECK(to_json_text(threaded) == to_json_text(serial_a));
  CHECK(deviations_csv(threaded) == deviations_csv(serial_a));
  CHECK(qq_csv(threaded) == qq_csv(serial_a));
  CHECK(rates_csv(threaded.rate_points) == rates_csv(serial_a.rate_points));
}

TEST_CASE("degenerate covariance is flagged, not tested") {
  ExperimentConfig cfg = small_config();
  cfg.noise.gamma.identity_scale = 0.0;
  const CltReport rep = run_clt_experiment(cfg);
  CHECK(rep.degenerate_noise);
  CHECK(rep.included == cfg.replications);
  // no distribution checks are emitted for a degenerate run
  for (const auto& c : rep.checks) {
    CHECK(c.name != "covariance_frobenius");
    CHECK(c.name != "whitened_mahalanobis_ks");
  }
}

TEST_CASE("exclusion ceiling flags the report invalid") {
  ExperimentConfig cfg = small_config();
  cfg.noise.gamma.identity_scale = 50.0;  // kicks the iterate out of the tube
  cfg.tube_check_from = 1;
  cfg.replications = 10;
  const CltReport rep = run_clt_experiment(cfg);
  CHECK(rep.excluded > 0);
  CHECK(rep.invalid);
  CHECK_FALSE(rep.pass());
}

TEST_CASE("rho sweep on common trajectories") {
  ExperimentConfig cfg = small_config();
  cfg.replications = 60;
  cfg.horizons = {400, 2000};
  cfg.sweep_rhos = {0.0, 1.0};
  const RhoSweepReport rep = run_rho_sweep(cfg);
  REQUIRE(rep.points.size() == 2);
  CHECK(rep.points[0].rho == 0.0);
  CHECK(rep.points[0].trace_ratio == doctest::Approx(1.0));
  CHECK(rep.points[1].predicted_ratio == doctest::Approx(4.0 / 3.0));
  CHECK(rep.points[1].trace_measured > 0.0);
}

TEST_CASE("oracle runner smoke") {
  ExperimentConfig cfg = small_config();
  cfg.oracle.draws = 400;
  cfg.oracle.horizon = 4000;
  cfg.oracle.limit_check_l = 2000;
  cfg.oracle.limit_check_n = 100000;
  cfg.oracle.sweep_horizons = {10000, 20000};
  const OracleReport rep = run_linear_oracle(cfg);
  REQUIRE(rep.cases.size() == 2);
  CHECK(rep.cases[0].name == "scalar");
  CHECK(rep.cases[0].limit_cov(0, 0) == doctest::Approx(0.25));
  CHECK(rep.cases[1].empirical_cov.rows() == 2);
  // draws at this scale track the limit loosely; just require sanity
  CHECK(rep.cases[0].frobenius_rel < 0.5);
}

TEST_CASE("rate slopes agree across problems") {
  // the distance-decay exponent is a property of the schedule, not of the
  // problem; flat and curved slopes match within 0.05 at matched seeds
  ExperimentConfig cfg = small_config();
  cfg.master_seed = 515151;
  cfg.replications = 300;
  cfg.horizons = {1000, 3162, 10000, 31623, 100000};
  cfg.tube_check_from.reset();
  cfg.rate_gammas = {0.8};
  const RateReport flat = run_rate_experiment(cfg);
  cfg.problem.kind = "sphere_well";
  cfg.problem.dim = 2;
  const RateReport sphere = run_rate_experiment(cfg);
  CHECK(std::abs(flat.cases[0].fit.slope + 0.8) <= 0.1);
  CHECK(std::abs(sphere.cases[0].fit.slope + 0.8) <= 0.1);
  CHECK(std::abs(flat.cases[0].fit.slope - sphere.cases[0].fit.slope) <= 0.05);
}
