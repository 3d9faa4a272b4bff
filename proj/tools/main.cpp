// Command line front end: configure, run, persist.
//
// Subcommands: clt-check, rate-check, rho-sweep, linear-oracle,
// feasible-region, simulate. Exit codes: 0 pass, 1 acceptance failure,
// 2 invalid config, 3 runtime error.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sgdlab/artifacts.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/runner.hpp"
#include "sgdlab/version.hpp"

namespace {

using namespace sgdlab;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool force = false;
};

ExperimentConfig load_config(const GlobalOpts& g) {
  ExperimentConfig cfg = g.config_path.empty()
                             ? ExperimentConfig{}
                             : ExperimentConfig::load(g.config_path);
  if (g.seed) cfg.master_seed = *g.seed;
  if (g.out) cfg.out_dir = *g.out;
  if (g.workers) cfg.workers = *g.workers;
  if (g.force) cfg.force = true;
  return cfg;
}

void print_checks(const std::vector<CheckOutcome>& checks) {
  for (const auto& c : checks) {
    std::printf("[%s] %-32s measured=%.6g tolerance=%.6g margin=%.6g\n",
                c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.tolerance,
                c.margin);
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

int run_clt(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Stopwatch timer;
  const CltReport rep = run_clt_experiment(cfg);
  write_run_artifacts(cfg, to_json_text(rep),
                      {{"deviations.csv", deviations_csv(rep)},
                       {"rates.csv", rates_csv(rep.rate_points)},
                       {"qq.csv", qq_csv(rep)}},
                      timer.seconds());
  print_checks(rep.checks);
  std::printf("included=%llu excluded=%llu invalid=%d\n",
              static_cast<unsigned long long>(rep.included),
              static_cast<unsigned long long>(rep.excluded), rep.invalid ? 1 : 0);
  return rep.pass() ? 0 : 1;
}

int run_rate(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Stopwatch timer;
  const RateReport rep = run_rate_experiment(cfg);
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& c : rep.cases) {
    char name[64];
    std::snprintf(name, sizeof(name), "rates_gamma_%.6g.csv", c.gamma_exp);
    files.emplace_back(name, rates_csv(c.points));
  }
  write_run_artifacts(cfg, to_json_text(rep), files, timer.seconds());
  print_checks(rep.checks);
  return rep.pass() ? 0 : 1;
}

int run_rho(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Stopwatch timer;
  const RhoSweepReport rep = run_rho_sweep(cfg);
  write_run_artifacts(cfg, to_json_text(rep), {}, timer.seconds());
  print_checks(rep.checks);
  std::printf("argmin rho = %.6g\n", rep.argmin_rho);
  return rep.pass() ? 0 : 1;
}

int run_oracle(const GlobalOpts& g) {
  ExperimentConfig cfg = load_config(g);
  Stopwatch timer;
  const OracleReport rep = run_linear_oracle(cfg);
  write_run_artifacts(cfg, to_json_text(rep), {}, timer.seconds());
  print_checks(rep.checks);
  return rep.pass() ? 0 : 1;
}

int run_feasible(const GlobalOpts& g, double af, double aphi, double apsi,
                 std::optional<double> gamma, std::optional<double> rho,
                 bool write_out) {
  RegularityTriple r;
  r.alpha_f = af;
  r.alpha_phi = aphi;
  r.alpha_psi = apsi;
  const FeasibleRegionReport rep = feasible_region(r, gamma, rho);
  std::fputs(rep.rendered.c_str(), stdout);
  if (write_out) {
    ExperimentConfig cfg = load_config(g);
    cfg.regularity = r;
    Stopwatch timer;
    write_run_artifacts(cfg, to_json_text(rep), {}, timer.seconds());
  }
  return 0;
}

int run_simulate(const GlobalOpts& g, std::uint64_t replications) {
  ExperimentConfig cfg = load_config(g);
  if (replications > 0) cfg.replications = replications;
  gate_assumptions(cfg);
  auto problem = make_problem(cfg.problem);

  SimulationConfig sim;
  sim.problem = problem;
  sim.schedule = cfg.schedule;
  sim.regularity = cfg.regularity;
  sim.noise = NoiseModel(noise_kind_from_string(cfg.noise.kind),
                         cfg.noise.gamma.as_matrix(problem->dim()));
  sim.horizons = cfg.horizons;
  sim.initial_distance = cfg.initial_distance;
  sim.tube_check_from = cfg.tube_check_from;
  sim.final_distance_max = cfg.final_distance_max;

  Stopwatch timer;
  std::ostringstream csv;
  csv << "replication,n,distance,objective_iterate,objective_average,"
         "tangential_drift,drift_bound,converged\n";
  for (std::uint64_t rep = 0; rep < cfg.replications; ++rep) {
    try {
      const Trajectory traj = run_replication(sim, cfg.master_seed, rep);
      for (const auto& snap : traj.snapshots) {
        if (snap.n == 0) continue;
        char line[256];
        std::snprintf(line, sizeof(line), "%llu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                      static_cast<unsigned long long>(rep),
                      static_cast<unsigned long long>(snap.n), snap.distance,
                      snap.objective_iterate, snap.objective_average,
                      snap.tangential_drift, snap.drift_bound,
                      traj.converged ? 1 : 0);
        csv << line;
      }
    } catch (const DivergenceError& e) {
      char line[128];
      std::snprintf(line, sizeof(line), "%llu,%llu,nan,nan,nan,nan,nan,0\n",
                    static_cast<unsigned long long>(rep),
                    static_cast<unsigned long long>(e.step));
      csv << line;
    }
  }
  write_run_artifacts(cfg, "{}\n", {{"trajectories.csv", csv.str()}},
                      timer.seconds());
  std::printf("wrote trajectories for %llu replications to %s\n",
              static_cast<unsigned long long>(cfg.replications),
              cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(sgdlab::kVersionString) +
               " - averaged stochastic gradient descent laboratory"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON experiment configuration");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
  std::string out_value;
  auto* out_opt = app.add_option("--out", out_value, "output directory override");
  int workers_value = 0;
  auto* workers_opt = app.add_option("--workers", workers_value, "worker threads");
  app.add_flag("--force", g.force,
               "run even when the feasibility assumptions fail (recorded in the manifest)");

  auto* clt = app.add_subcommand("clt-check", "Monte Carlo check of both limit laws");
  auto* rate = app.add_subcommand("rate-check", "distance-decay rate regression");
  auto* rho = app.add_subcommand("rho-sweep", "weight-exponent sweep");
  auto* oracle = app.add_subcommand("linear-oracle", "linear averaged-system oracle");
  auto* feasible = app.add_subcommand("feasible-region", "parameter feasibility intervals");
  auto* simulate = app.add_subcommand("simulate", "emit trajectory summaries");

  double af = 1.0, aphi = 1.0, apsi = 1.0;
  std::optional<double> fgamma, frho;
  double fgamma_v = 0.0, frho_v = 0.0;
  bool fwrite = false;
  feasible->add_option("--alpha-f", af, "gradient-field regularity exponent");
  feasible->add_option("--alpha-phi", aphi, "chart regularity exponent");
  feasible->add_option("--alpha-psi", apsi, "inverse-chart regularity exponent");
  auto* fg = feasible->add_option("--gamma", fgamma_v, "step exponent");
  auto* fr = feasible->add_option("--rho", frho_v, "weight exponent");
  feasible->add_flag("--write", fwrite, "also write report artifacts to --out");

  std::uint64_t sim_reps = 0;
  simulate->add_option("--replications", sim_reps, "replication count override");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed_value;
  if (*out_opt) g.out = out_value;
  if (*workers_opt) g.workers = workers_value;
  if (*fg) fgamma = fgamma_v;
  if (*fr) frho = frho_v;

  try {
    if (clt->parsed()) return run_clt(g);
    if (rate->parsed()) return run_rate(g);
    if (rho->parsed()) return run_rho(g);
    if (oracle->parsed()) return run_oracle(g);
    if (feasible->parsed()) return run_feasible(g, af, aphi, apsi, fgamma, frho, fwrite);
    if (simulate->parsed()) return run_simulate(g, sim_reps);
  } catch (const sgdlab::ConfigError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 3;
  }
  return 2;
}
