#include "sgdlab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sgdlab {

using json = nlohmann::json;

std::shared_ptr<const Problem> make_problem(const ProblemConfig& pc) {
  if (pc.kind == "flat_quadratic") {
    Mat a;
    if (!pc.quadratic.empty()) {
      const auto rows = pc.quadratic.size();
      a.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
      for (std::size_t i = 0; i < rows; ++i) {
        if (pc.quadratic[i].size() != rows) {
          throw ConfigError("flat_quadratic: quadratic matrix must be square");
        }
        for (std::size_t j = 0; j < rows; ++j) {
          a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              pc.quadratic[i][j];
        }
      }
    } else if (!pc.quadratic_diag.empty()) {
      const auto n = static_cast<Eigen::Index>(pc.quadratic_diag.size());
      a = Mat::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) a(i, i) = pc.quadratic_diag[i];
    } else {
      throw ConfigError("flat_quadratic: quadratic or quadratic_diag required");
    }
    return make_flat_quadratic(pc.manifold_dim, std::move(a));
  }
  if (pc.kind == "sphere_well") return make_sphere_well(pc.dim);
  if (pc.kind == "hyperbola_toy") return make_hyperbola(pc.hyperbola_c);
  throw ConfigError("unknown problem kind: " + pc.kind);
}

Mat GammaSpec::as_matrix(int dim) const {
  if (!matrix.empty()) {
    const auto rows = matrix.size();
    if (static_cast<int>(rows) != dim) {
      throw ConfigError("noise gamma: matrix dimension mismatch");
    }
    Mat g(dim, dim);
    for (std::size_t i = 0; i < rows; ++i) {
      if (static_cast<int>(matrix[i].size()) != dim) {
        throw ConfigError("noise gamma: matrix must be square");
      }
      for (std::size_t j = 0; j < rows; ++j) {
        g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix[i][j];
      }
    }
    return g;
  }
  if (!identity_scale.has_value()) {
    throw ConfigError("noise gamma: either matrix or identity_scale required");
  }
  return *identity_scale * Mat::Identity(dim, dim);
}

namespace {

json matrix_to_json(const std::vector<std::vector<double>>& m) {
  json out = json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

std::vector<std::vector<double>> matrix_from_json(const json& j) {
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(row.get<std::vector<double>>());
  return out;
}

json problem_to_json(const ProblemConfig& p) {
  json j;
  j["kind"] = p.kind;
  if (p.kind == "sphere_well") j["dim"] = p.dim;
  if (p.kind == "flat_quadratic") {
    j["manifold_dim"] = p.manifold_dim;
    if (!p.quadratic.empty()) {
      j["quadratic"] = matrix_to_json(p.quadratic);
    } else {
      j["quadratic_diag"] = p.quadratic_diag;
    }
  }
  if (p.kind == "hyperbola_toy") j["hyperbola_c"] = p.hyperbola_c;
  return j;
}

ProblemConfig problem_from_json(const json& j) {
  ProblemConfig p;
  p.kind = j.at("kind").get<std::string>();
  if (j.contains("dim")) p.dim = j.at("dim").get<int>();
  if (j.contains("manifold_dim")) p.manifold_dim = j.at("manifold_dim").get<int>();
  if (j.contains("quadratic")) p.quadratic = matrix_from_json(j.at("quadratic"));
  if (j.contains("quadratic_diag")) {
    p.quadratic_diag = j.at("quadratic_diag").get<std::vector<double>>();
  }
  if (j.contains("hyperbola_c")) p.hyperbola_c = j.at("hyperbola_c").get<double>();
  return p;
}

json tolerances_to_json(const ToleranceSet& t) {
  json j;
  j["exclusion_ceiling"] = t.exclusion_ceiling;
  j["frobenius_rel"] = t.frobenius_rel;
  j["ks_alpha"] = t.ks_alpha;
  j["tangential_energy_ratio"] = t.tangential_energy_ratio;
  j["fgap_mean_rel"] = t.fgap_mean_rel;
  j["fgap_var_rel"] = t.fgap_var_rel;
  j["rho_trace_rel"] = t.rho_trace_rel;
  j["rate_slope_abs"] = t.rate_slope_abs;
  j["oracle_cov_rel"] = t.oracle_cov_rel;
  j["oracle_limit_residual"] = t.oracle_limit_residual;
  j["drift_ratio_min"] = t.drift_ratio_min;
  return j;
}

ToleranceSet tolerances_from_json(const json& j) {
  ToleranceSet t;
  auto get = [&](const char* key, double& into) {
    if (j.contains(key)) into = j.at(key).get<double>();
  };
  get("exclusion_ceiling", t.exclusion_ceiling);
  get("frobenius_rel", t.frobenius_rel);
  get("ks_alpha", t.ks_alpha);
  get("tangential_energy_ratio", t.tangential_energy_ratio);
  get("fgap_mean_rel", t.fgap_mean_rel);
  get("fgap_var_rel", t.fgap_var_rel);
  get("rho_trace_rel", t.rho_trace_rel);
  get("rate_slope_abs", t.rate_slope_abs);
  get("oracle_cov_rel", t.oracle_cov_rel);
  get("oracle_limit_residual", t.oracle_limit_residual);
  get("drift_ratio_min", t.drift_ratio_min);
  return t;
}

json oracle_to_json(const OracleConfig& o) {
  json j;
  json cases = json::array();
  for (const auto& c : o.cases) {
    json jc;
    jc["name"] = c.name;
    jc["h"] = matrix_to_json(c.h);
    jc["gamma_theta"] = matrix_to_json(c.gamma_theta);
    cases.push_back(jc);
  }
  j["cases"] = cases;
  j["draws"] = o.draws;
  j["horizon"] = o.horizon;
  j["limit_check_l"] = o.limit_check_l;
  j["limit_check_n"] = o.limit_check_n;
  j["sweep_horizons"] = o.sweep_horizons;
  return j;
}

OracleConfig oracle_from_json(const json& j) {
  OracleConfig o;
  o.cases.clear();
  for (const auto& jc : j.at("cases")) {
    OracleCase c;
    c.name = jc.at("name").get<std::string>();
    c.h = matrix_from_json(jc.at("h"));
    c.gamma_theta = matrix_from_json(jc.at("gamma_theta"));
    o.cases.push_back(c);
  }
  o.draws = j.at("draws").get<std::uint64_t>();
  o.horizon = j.at("horizon").get<std::uint64_t>();
  o.limit_check_l = j.at("limit_check_l").get<std::uint64_t>();
  o.limit_check_n = j.at("limit_check_n").get<std::uint64_t>();
  o.sweep_horizons = j.at("sweep_horizons").get<std::vector<std::uint64_t>>();
  return o;
}

}  // namespace

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["problem"] = problem_to_json(problem);
  j["schedule"] = {{"c_gamma", schedule.c_gamma},
                   {"gamma", schedule.gamma_exp},
                   {"rho", schedule.rho},
                   {"beta", schedule.beta}};
  j["regularity"] = {{"alpha_f", regularity.alpha_f},
                     {"alpha_phi", regularity.alpha_phi},
                     {"alpha_psi", regularity.alpha_psi}};
  json gamma;
  if (!noise.gamma.matrix.empty()) {
    gamma["matrix"] = matrix_to_json(noise.gamma.matrix);
  } else {
    gamma["identity_scale"] = noise.gamma.identity_scale.value_or(1.0);
  }
  j["noise"] = {{"kind", noise.kind}, {"gamma", gamma}};
  j["replications"] = replications;
  j["master_seed"] = master_seed;
  j["horizons"] = horizons;
  j["initial_distance"] = initial_distance;
  if (tube_check_from) j["tube_check_from"] = *tube_check_from;
  if (final_distance_max) j["final_distance_max"] = *final_distance_max;
  j["out_dir"] = out_dir;
  j["workers"] = workers;
  j["force"] = force;
  j["tolerances"] = tolerances_to_json(tolerances);
  j["sweep_rhos"] = sweep_rhos;
  j["rate_gammas"] = rate_gammas;
  j["oracle"] = oracle_to_json(oracle);
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    ExperimentConfig c;
    c.problem = problem_from_json(j.at("problem"));
    const json& s = j.at("schedule");
    c.schedule.c_gamma = s.at("c_gamma").get<double>();
    c.schedule.gamma_exp = s.at("gamma").get<double>();
    c.schedule.rho = s.at("rho").get<double>();
    c.schedule.beta = s.at("beta").get<double>();
    if (j.contains("regularity")) {
      const json& r = j.at("regularity");
      c.regularity.alpha_f = r.at("alpha_f").get<double>();
      c.regularity.alpha_phi = r.at("alpha_phi").get<double>();
      c.regularity.alpha_psi = r.at("alpha_psi").get<double>();
    }
    const json& n = j.at("noise");
    c.noise.kind = n.at("kind").get<std::string>();
    const json& g = n.at("gamma");
    if (g.contains("matrix")) {
      c.noise.gamma.matrix = matrix_from_json(g.at("matrix"));
      c.noise.gamma.identity_scale.reset();
    } else {
      c.noise.gamma.identity_scale = g.at("identity_scale").get<double>();
    }
    c.replications = j.at("replications").get<std::uint64_t>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.horizons = j.at("horizons").get<std::vector<std::uint64_t>>();
    c.initial_distance = j.at("initial_distance").get<double>();
    if (j.contains("tube_check_from")) {
      c.tube_check_from = j.at("tube_check_from").get<std::uint64_t>();
    }
    if (j.contains("final_distance_max")) {
      c.final_distance_max = j.at("final_distance_max").get<double>();
    }
    c.out_dir = j.at("out_dir").get<std::string>();
    c.workers = j.at("workers").get<int>();
    c.force = j.at("force").get<bool>();
    if (j.contains("tolerances")) c.tolerances = tolerances_from_json(j.at("tolerances"));
    if (j.contains("sweep_rhos")) c.sweep_rhos = j.at("sweep_rhos").get<std::vector<double>>();
    if (j.contains("rate_gammas")) c.rate_gammas = j.at("rate_gammas").get<std::vector<double>>();
    if (j.contains("oracle")) c.oracle = oracle_from_json(j.at("oracle"));
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

}  // namespace sgdlab
