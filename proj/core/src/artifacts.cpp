#include "sgdlab/artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgdlab/numerics.hpp"
#include "sgdlab/version.hpp"

namespace sgdlab {

using json = nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json checks_json(const std::vector<CheckOutcome>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"measured", c.measured},
                   {"tolerance", c.tolerance},
                   {"margin", c.margin}});
  }
  return out;
}

json rate_points_json(const std::vector<RatePoint>& pts) {
  json out = json::array();
  for (const auto& p : pts) {
    out.push_back({{"n", p.n},
                   {"mean_sq_dist", p.mean_sq_dist},
                   {"stderr", p.stderr_mean}});
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string to_json_text(const CltReport& rep) {
  json j;
  j["total"] = rep.total;
  j["included"] = rep.included;
  j["excluded"] = rep.excluded;
  j["invalid"] = rep.invalid;
  j["degenerate_noise"] = rep.degenerate_noise;
  j["empirical_cov"] = matrix_json(rep.empirical_cov);
  if (rep.sigma_theory.size() > 0) j["sigma_theory"] = matrix_json(rep.sigma_theory);
  j["frobenius_rel"] = rep.frobenius_rel;
  j["direction_ks"] = rep.direction_ks;
  j["mahalanobis"] = {{"statistic", rep.mahalanobis.statistic},
                      {"dof", rep.mahalanobis.dof},
                      {"mean_in_range", rep.mahalanobis.mean_in_range},
                      {"mean_out_of_range", rep.mahalanobis.mean_out_of_range},
                      {"count", rep.mahalanobis.count}};
  j["tangential_energy_ratio"] = rep.tangential_energy_ratio;
  j["window_variance_factor"] = rep.window_variance_factor;
  j["f_gap"] = {{"sample_mean", rep.f_gap.sample_mean},
                {"sample_variance", rep.f_gap.sample_variance},
                {"predicted_mean", rep.f_gap.predicted_mean},
                {"predicted_variance", rep.f_gap.predicted_variance},
                {"mean_rel_err", rep.f_gap.mean_rel_err},
                {"variance_rel_err", rep.f_gap.variance_rel_err},
                {"cdf_distance", rep.f_gap.cdf_distance}};
  j["f_gap_spectrum"] = rep.f_gap_spectrum;
  j["rate_points"] = rate_points_json(rep.rate_points);
  j["rate"] = {{"slope", rep.rate.slope},
               {"intercept", rep.rate.intercept},
               {"residual_rms", rep.rate.residual_rms}};
  j["drift"] = {{"mean", rep.drift_mean},
                {"bound_mean", rep.drift_bound_mean},
                {"theta_mean", rep.theta_mean},
                {"ratio", rep.drift_theta_ratio},
                {"censored", rep.drift_censored}};
  j["checks"] = checks_json(rep.checks);
  j["pass"] = rep.pass();
  return j.dump(2) + "\n";
}

std::string to_json_text(const RhoSweepReport& rep) {
  json j;
  j["total"] = rep.total;
  j["included"] = rep.included;
  j["invalid"] = rep.invalid;
  json pts = json::array();
  for (const auto& p : rep.points) {
    pts.push_back({{"rho", p.rho},
                   {"trace_measured", p.trace_measured},
                   {"trace_ratio", p.trace_ratio},
                   {"predicted_ratio", p.predicted_ratio},
                   {"samples", p.samples}});
  }
  j["points"] = pts;
  j["argmin_rho"] = rep.argmin_rho;
  j["checks"] = checks_json(rep.checks);
  j["pass"] = rep.pass();
  return j.dump(2) + "\n";
}

std::string to_json_text(const RateReport& rep) {
  json j;
  json cases = json::array();
  for (const auto& c : rep.cases) {
    cases.push_back({{"gamma", c.gamma_exp},
                     {"slope", c.fit.slope},
                     {"intercept", c.fit.intercept},
                     {"residual_rms", c.fit.residual_rms},
                     {"included", c.included},
                     {"excluded", c.excluded},
                     {"points", rate_points_json(c.points)}});
  }
  j["cases"] = cases;
  j["checks"] = checks_json(rep.checks);
  j["pass"] = rep.pass();
  return j.dump(2) + "\n";
}

std::string to_json_text(const OracleReport& rep) {
  json j;
  json cases = json::array();
  for (const auto& c : rep.cases) {
    json sweep = json::array();
    for (const auto& pt : c.sweep) {
      sweep.push_back({{"n", pt.n}, {"max_weighted_norm", pt.max_weighted_norm}});
    }
    cases.push_back({{"name", c.name},
                     {"limit_cov", matrix_json(c.limit_cov)},
                     {"empirical_cov", matrix_json(c.empirical_cov)},
                     {"frobenius_rel", c.frobenius_rel},
                     {"limit_residual", c.limit_residual},
                     {"sweep", sweep}});
  }
  j["cases"] = cases;
  j["checks"] = checks_json(rep.checks);
  j["pass"] = rep.pass();
  return j.dump(2) + "\n";
}

std::string to_json_text(const FeasibleRegionReport& rep) {
  json j;
  j["alpha_f"] = rep.regularity.alpha_f;
  j["alpha_phi"] = rep.regularity.alpha_phi;
  j["alpha_psi"] = rep.regularity.alpha_psi;
  j["gamma_interval"] = {{"lower", rep.gamma_interval.lower},
                         {"upper", rep.gamma_interval.upper}};
  if (rep.has_rho) {
    j["gamma"] = rep.gamma_used;
    j["rho_interval"] = {{"lower", rep.rho_interval.lower}};
  }
  if (rep.has_beta) {
    j["rho"] = rep.rho_used;
    j["beta_interval"] = {{"lower", rep.beta_interval.lower},
                          {"upper", rep.beta_interval.upper},
                          {"empty", rep.beta_interval.empty()}};
  }
  return j.dump(2) + "\n";
}

std::string to_json_text(const ConditionReport& rep) {
  json items = json::array();
  for (const auto& it : rep.items) {
    items.push_back({{"name", it.name},
                     {"pass", it.pass},
                     {"margin", it.margin},
                     {"detail", it.detail}});
  }
  json j;
  j["items"] = items;
  j["all_pass"] = rep.all_pass();
  return j.dump(2) + "\n";
}

std::string deviations_csv(const CltReport& rep) {
  std::ostringstream out;
  const int d = rep.deviations.empty()
                    ? 0
                    : static_cast<int>(rep.deviations.front().components.size());
  out << "replication,horizon";
  for (int i = 0; i < d; ++i) out << ",dev_" << i;
  out << "\n";
  for (const auto& row : rep.deviations) {
    out << row.replication << "," << row.horizon;
    for (int i = 0; i < d; ++i) out << "," << fmt17(row.components[i]);
    out << "\n";
  }
  return out.str();
}

std::string rates_csv(const std::vector<RatePoint>& points) {
  std::ostringstream out;
  out << "n,mean_sq_dist,stderr\n";
  for (const auto& p : points) {
    out << p.n << "," << fmt17(p.mean_sq_dist) << "," << fmt17(p.stderr_mean)
        << "\n";
  }
  return out.str();
}

std::string qq_csv(const CltReport& rep) {
  std::vector<double> sorted = rep.qq_standardized;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream out;
  out << "theoretical_quantile,empirical_quantile\n";
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    out << fmt17(normal_quantile(p)) << "," << fmt17(sorted[i]) << "\n";
  }
  return out.str();
}

std::string write_run_artifacts(
    const ExperimentConfig& cfg, const std::string& report_json,
    const std::vector<std::pair<std::string, std::string>>& files,
    double wall_clock_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  const std::string config_text = cfg.to_json_text();
  std::vector<std::pair<std::string, std::string>> all;
  all.emplace_back("config.json", config_text);
  all.emplace_back("report.json", report_json);
  for (const auto& f : files) all.push_back(f);

  json manifest;
  manifest["version"] = kVersionString;
  manifest["config_hash"] = hex64(fnv1a64(config_text));
  manifest["master_seed"] = cfg.master_seed;
  manifest["replications"] = cfg.replications;
  manifest["forced"] = cfg.force;
  manifest["wall_clock_seconds"] = wall_clock_seconds;
  json jfiles;
  for (const auto& [name, content] : all) {
    write_file(dir / name, content);
    jfiles[name] = {{"checksum", hex64(fnv1a64(content))},
                    {"bytes", content.size()}};
  }
  manifest["files"] = jfiles;
  const std::string manifest_text = manifest.dump(2) + "\n";
  write_file(dir / "manifest.json", manifest_text);
  return manifest_text;
}

bool verify_manifest(const std::string& dir, std::string* error) {
  namespace fs = std::filesystem;
  try {
    const json manifest = json::parse(read_file(fs::path(dir) / "manifest.json"));
    for (const auto& [name, meta] : manifest.at("files").items()) {
      const std::string content = read_file(fs::path(dir) / name);
      const std::string expect = meta.at("checksum").get<std::string>();
      if (hex64(fnv1a64(content)) != expect) {
        if (error) *error = "checksum mismatch for " + name;
        return false;
      }
      if (content.size() != meta.at("bytes").get<std::size_t>()) {
        if (error) *error = "size mismatch for " + name;
        return false;
      }
    }
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return false;
  }
  return true;
}

}  // namespace sgdlab
