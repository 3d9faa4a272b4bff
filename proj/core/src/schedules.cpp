#include "sgdlab/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sgdlab/numerics.hpp"

namespace sgdlab {

void ScheduleParams::validate() const {
  if (!(c_gamma > 0.0)) throw std::invalid_argument("ScheduleParams: c_gamma must be > 0");
  if (!(gamma_exp > 0.0 && gamma_exp < 1.0)) {
    throw std::invalid_argument("ScheduleParams: gamma_exp must be in (0,1)");
  }
  if (!(rho > -0.5)) throw std::invalid_argument("ScheduleParams: rho must be > -1/2");
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("ScheduleParams: beta must be in (0,1)");
  }
}

double RegularityTriple::alpha() const {
  return std::min(alpha_psi, std::min(alpha_f, alpha_phi));
}

double RegularityTriple::alpha_prime() const {
  return std::min(alpha_psi, 0.5 * (1.0 + alpha()));
}

void RegularityTriple::validate() const {
  auto in_domain = [](double a) { return a > 0.0 && a <= 1.0; };
  if (!in_domain(alpha_f) || !in_domain(alpha_phi) || !in_domain(alpha_psi)) {
    throw std::invalid_argument("RegularityTriple: exponents must be in (0,1]");
  }
}

double step_size(std::uint64_t n, const ScheduleParams& p) {
  return p.c_gamma * std::pow(static_cast<double>(n), -p.gamma_exp);
}

double weight(std::uint64_t n, double rho) {
  return std::pow(static_cast<double>(n), rho);
}

std::uint64_t burn_in(std::uint64_t n, double beta) {
  const double v = 0.5 * std::pow(static_cast<double>(n), beta);
  auto n0 = static_cast<std::uint64_t>(std::floor(v));
  if (n0 >= n) n0 = n - 1;  // floor(n^beta/2) < n for beta < 1; guard rounding
  return n0;
}

double weight_mass(std::uint64_t n, const ScheduleParams& p) {
  const std::uint64_t n0 = burn_in(n, p.beta);
  CompensatedSum acc;
  for (std::uint64_t i = n0 + 1; i <= n; ++i) acc.add(weight(i, p.rho));
  return acc.value();
}

double sigma_n(std::uint64_t n, const ScheduleParams& p) {
  const std::uint64_t n0 = burn_in(n, p.beta);
  if (n <= n0) throw std::invalid_argument("sigma_n: window (n0, n] is empty");
  CompensatedSum mass;
  CompensatedSum sq;
  for (std::uint64_t i = n0 + 1; i <= n; ++i) {
    const double b = weight(i, p.rho);
    mass.add(b);
    sq.add(b * b);
  }
  return std::sqrt(sq.value()) / mass.value();
}

double sigma_rm(std::uint64_t n, double gamma_exp) {
  return std::pow(static_cast<double>(n), -0.5 * gamma_exp);
}

double c_rho(double rho) {
  if (!(rho > -0.5)) throw std::invalid_argument("c_rho: rho must be > -1/2");
  return (rho + 1.0) / std::sqrt(2.0 * rho + 1.0);
}

double clock_time(std::uint64_t n, const ScheduleParams& p) {
  CompensatedSum acc;
  for (std::uint64_t m = 1; m <= n; ++m) acc.add(step_size(m, p));
  return acc.value();
}

Interval feasible_gamma_interval(const RegularityTriple& r) {
  r.validate();
  if (!(r.alpha_psi > 0.5)) {
    throw std::invalid_argument(
        "feasible_gamma_interval: alpha_psi <= 1/2, interval may be empty");
  }
  const double a = r.alpha();
  const double ap = r.alpha_prime();
  const double t1 = 1.0 - a / (1.0 + 2.0 * a);
  const double t2 = 1.0 - 0.5 * r.alpha_phi / (1.0 + r.alpha_phi);
  const double t3 = 1.0 / (2.0 * ap);
  return Interval{std::max(t1, std::max(t2, t3)), 1.0};
}

Interval feasible_rho_interval(double gamma_exp, const RegularityTriple& r) {
  r.validate();
  return Interval{gamma_exp * r.alpha_prime() - 1.0,
                  std::numeric_limits<double>::infinity()};
}

Interval feasible_beta_interval(const ScheduleParams& p, const RegularityTriple& r) {
  r.validate();
  const double g = p.gamma_exp;
  const double a = r.alpha();
  const double t1 = 1.0 / ((2.0 * g - 1.0) * (1.0 + r.alpha_phi));
  const double t2 = (1.0 - g) / (a * (2.0 * g - 1.0));
  double lower = std::max(t1, t2);
  if (p.rho < g - 1.0) {
    const double t3 =
        (1.0 / (1.0 + r.alpha_phi) - (1.0 + p.rho)) / (g - (1.0 + p.rho));
    lower = std::max(lower, t3);
  }
  return Interval{lower, 1.0};
}

bool ConditionReport::all_pass() const {
  return std::all_of(items.begin(), items.end(),
                     [](const ConditionItem& it) { return it.pass; });
}

const ConditionItem* ConditionReport::find(const std::string& name) const {
  for (const auto& it : items) {
    if (it.name == name) return &it;
  }
  return nullptr;
}

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Strict inequality as a condition item: pass iff value > bound (or <), with
// the signed distance as margin. Equality fails with zero margin.
ConditionItem strict_above(std::string name, double value, double bound,
                           std::string detail = {}) {
  ConditionItem it;
  it.name = std::move(name);
  it.margin = value - bound;
  it.pass = it.margin > 0.0;
  it.detail = detail.empty()
                  ? format_value(value) + " vs bound " + format_value(bound)
                  : std::move(detail);
  return it;
}

ConditionItem strict_below(std::string name, double value, double bound,
                           std::string detail = {}) {
  ConditionItem it;
  it.name = std::move(name);
  it.margin = bound - value;
  it.pass = it.margin > 0.0;
  it.detail = detail.empty()
                  ? format_value(value) + " vs bound " + format_value(bound)
                  : std::move(detail);
  return it;
}

}  // namespace

ConditionReport check_assumptions(const ScheduleParams& p, const RegularityTriple& r) {
  ConditionReport rep;

  auto in_unit = [](double a) { return a > 0.0 && a <= 1.0; };
  {
    ConditionItem it;
    it.name = "regularity.domain";
    it.pass = in_unit(r.alpha_f) && in_unit(r.alpha_phi) && in_unit(r.alpha_psi);
    it.margin = std::min({r.alpha_f, r.alpha_phi, r.alpha_psi});
    it.detail = "exponents must lie in (0,1]";
    rep.items.push_back(it);
  }
  rep.items.push_back(strict_above("regularity.alpha_psi", r.alpha_psi, 0.5));

  const bool alphas_ok = rep.items[0].pass && rep.items[1].pass;
  if (alphas_ok) {
    const double a = r.alpha();
    const double ap = r.alpha_prime();
    rep.items.push_back(strict_above("step_exponent.vs_alpha", p.gamma_exp,
                                     1.0 - a / (1.0 + 2.0 * a)));
    rep.items.push_back(strict_above("step_exponent.vs_alpha_phi", p.gamma_exp,
                                     1.0 - 0.5 * r.alpha_phi / (1.0 + r.alpha_phi)));
    rep.items.push_back(
        strict_above("step_exponent.vs_alpha_prime", p.gamma_exp, 1.0 / (2.0 * ap)));
    rep.items.push_back(strict_below("step_exponent.upper", p.gamma_exp, 1.0));
    rep.items.push_back(
        strict_above("weight_exponent", 1.0 + p.rho, p.gamma_exp * ap));

    const Interval beta_iv = feasible_beta_interval(p, r);
    rep.items.push_back(strict_above("burn_in_exponent.lower", p.beta, beta_iv.lower));
    rep.items.push_back(strict_below("burn_in_exponent.upper", p.beta, 1.0));
    if (beta_iv.empty()) {
      ConditionItem it;
      it.name = "burn_in_exponent.window";
      it.pass = false;
      it.margin = 1.0 - beta_iv.lower;
      it.detail = "burn-in window is empty: infeasible";
      rep.items.push_back(it);
    }
  }

  // Numeric probe of the weight-step ratio condition: the ratio deviation
  // divided by gamma_n must decay along the grid.
  double prev = std::numeric_limits<double>::infinity();
  bool decaying = true;
  double last = 0.0;
  std::string grid_detail;
  for (std::uint64_t n : {std::uint64_t{100}, std::uint64_t{1000}, std::uint64_t{10000},
                          std::uint64_t{100000}, std::uint64_t{1000000}}) {
    const double ratio = (weight(n + 1, p.rho) * step_size(n, p)) /
                         (weight(n, p.rho) * step_size(n + 1, p));
    const double dev = std::abs(ratio - 1.0) / step_size(n, p);
    if (dev > prev) decaying = false;
    prev = dev;
    last = dev;
    if (!grid_detail.empty()) grid_detail += ", ";
    grid_detail += "n=" + std::to_string(n) + ": " + format_value(dev);
  }
  ConditionItem ratio_item;
  ratio_item.name = "weight_step_ratio";
  ratio_item.pass = decaying;
  ratio_item.margin = -last;
  ratio_item.detail = grid_detail;
  rep.items.push_back(ratio_item);

  return rep;
}

bool ErrorTermTrend::decreasing() const {
  int violations = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].value > samples[i - 1].value) ++violations;
  }
  return violations <= 1;
}

double tangential_drift_bound(std::uint64_t n, const ScheduleParams& p,
                              const RegularityTriple& r) {
  const std::uint64_t n0 = burn_in(n, p.beta);
  const double a = r.alpha();
  CompensatedSum sum_terms;
  CompensatedSum sum_sq;
  for (std::uint64_t k = n0 + 1; k <= n; ++k) {
    const double gk = step_size(k, p);
    const double sk = sigma_rm(k, p.gamma_exp);
    const double sk1 = sigma_rm(k - 1, p.gamma_exp);
    sum_terms.add(std::pow(std::sqrt(gk) * sk, 1.0 + r.alpha_psi) +
                  gk * std::pow(sk1, 1.0 + a));
    sum_sq.add(gk * sk * sk);
  }
  return sum_terms.value() + std::sqrt(sum_sq.value());
}

std::vector<ErrorTermTrend> error_term_report(const ScheduleParams& p,
                                              const RegularityTriple& r,
                                              std::span<const std::uint64_t> grid) {
  ErrorTermTrend burn_boundary{"burn_in_boundary", {}};
  ErrorTermTrend drift{"tangential_drift", {}};
  ErrorTermTrend remainder{"averaged_remainder", {}};
  ErrorTermTrend sq_avg{"squared_distance_average", {}};

  for (std::uint64_t n : grid) {
    const std::uint64_t n0 = burn_in(n, p.beta);
    if (n0 == 0 || n <= n0 + 1) continue;
    const double sn = sigma_n(n, p);
    const double bbar = weight_mass(n, p);
    const double a = r.alpha();

    const double eps_drift = tangential_drift_bound(n, p, r);
    drift.samples.push_back(
        {n, std::pow(eps_drift, 1.0 + r.alpha_phi) / sn});

    burn_boundary.samples.push_back(
        {n, weight(n0, p.rho) / (bbar * step_size(n0, p)) *
                sigma_rm(n0, p.gamma_exp) / sn});

    CompensatedSum rem;
    CompensatedSum sq;
    for (std::uint64_t k = n0 + 1; k <= n; ++k) {
      const double bk = weight(k, p.rho);
      const double gk = step_size(k, p);
      const double sk = sigma_rm(k, p.gamma_exp);
      const double sk1 = sigma_rm(k - 1, p.gamma_exp);
      rem.add(bk * (std::pow(gk, -0.5 * (1.0 - r.alpha_psi)) *
                        std::pow(sk, 1.0 + r.alpha_psi) +
                    std::pow(sk1, 1.0 + a) + sk1 * std::pow(eps_drift, a)));
      sq.add(bk * sk * sk);
    }
    remainder.samples.push_back({n, rem.value() / bbar / sn});
    sq_avg.samples.push_back(
        {n, std::pow(sq.value() / bbar, 0.5 * (1.0 + r.alpha_phi)) / sn});
  }
  return {burn_boundary, drift, remainder, sq_avg};
}

}  // namespace sgdlab
