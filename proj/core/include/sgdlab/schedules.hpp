#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sgdlab {

/// Step-size, weight and burn-in family: gamma_n = C_gamma * n^(-gamma),
/// b_n = n^rho, n0(n) = floor(n^beta / 2).
struct ScheduleParams {
  double c_gamma = 1.0;
  double gamma_exp = 0.8;
  double rho = 0.0;
  double beta = 0.9;

  /// Throws std::invalid_argument when a field is outside its domain.
  void validate() const;
};

/// Holder regularity exponents of the gradient field and the chart pair.
struct RegularityTriple {
  double alpha_f = 1.0;
  double alpha_phi = 1.0;
  double alpha_psi = 1.0;

  double alpha() const;        // min of the three
  double alpha_prime() const;  // min(alpha_psi, (1+alpha)/2)
  void validate() const;
};

double step_size(std::uint64_t n, const ScheduleParams& p);
double weight(std::uint64_t n, double rho);
std::uint64_t burn_in(std::uint64_t n, double beta);

/// Sum of the weights over the averaging window (n0(n), n].
double weight_mass(std::uint64_t n, const ScheduleParams& p);

/// Averaging scale sigma_n = sqrt(sum b_i^2) / (sum b_i) over the window,
/// computed as an exact finite sum with compensated accumulation.
double sigma_n(std::uint64_t n, const ScheduleParams& p);

/// Raw-iterate scale n^(-gamma/2).
double sigma_rm(std::uint64_t n, double gamma_exp);

/// Limit-law weight factor (rho+1)/sqrt(2*rho+1); requires rho > -1/2.
double c_rho(double rho);

/// Step-size clock t_n = sum_{m<=n} gamma_m.
double clock_time(std::uint64_t n, const ScheduleParams& p);

/// Open interval; empty() when lower >= upper. Feasibility boundaries are
/// strict: values on the boundary do not count as contained.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return x > lower && x < upper; }
  bool empty() const { return !(lower < upper); }
};

/// Admissible step exponents (lower, 1). Throws when alpha_psi <= 1/2, in
/// which case the interval may be empty.
Interval feasible_gamma_interval(const RegularityTriple& r);

/// Admissible weight exponents (gamma*alpha' - 1, inf); always contains 0.
Interval feasible_rho_interval(double gamma_exp, const RegularityTriple& r);

/// Admissible burn-in exponents (lower, 1). An empty interval is returned
/// as-is: callers must treat it as infeasible, never clamp.
Interval feasible_beta_interval(const ScheduleParams& p, const RegularityTriple& r);

struct ConditionItem {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // distance to the violated/satisfied boundary
  std::string detail;
};

struct ConditionReport {
  std::vector<ConditionItem> items;
  bool all_pass() const;
  const ConditionItem* find(const std::string& name) const;
};

/// Itemized feasibility report: regularity domain, the step/weight exponent
/// inequalities, the burn-in window, and a numeric probe of the
/// weight-step ratio condition b_{n+1}*gamma_n/(b_n*gamma_{n+1}) = 1 + o(gamma_n)
/// on the grid n in {1e2,...,1e6}. Never throws; failures carry margins.
ConditionReport check_assumptions(const ScheduleParams& p, const RegularityTriple& r);

/// One sampled value of an asymptotic error term, normalized by sigma_n.
struct ErrorTermSample {
  std::uint64_t n = 0;
  double value = 0.0;
};

struct ErrorTermTrend {
  std::string name;
  std::vector<ErrorTermSample> samples;
  /// Decreasing along the grid up to one local violation.
  bool decreasing() const;
};

/// Numeric probes of the remainder-term conditions behind the averaged
/// limit law: each quantity that must vanish relative to sigma_n is sampled
/// on the index grid and reported as quantity/sigma_n. The probes can only
/// exhibit the trend, not prove the limit.
std::vector<ErrorTermTrend> error_term_report(const ScheduleParams& p,
                                              const RegularityTriple& r,
                                              std::span<const std::uint64_t> grid);

/// Tangential-drift comparator: the window sum
///   sum_k ((sqrt(gamma_k) s_k)^(1+alpha_psi) + gamma_k s_{k-1}^(1+alpha))
///   + sqrt(sum_k gamma_k s_k^2),  s_k = sigma_rm(k),
/// over k in (n0(n), n]. Used both as a feasibility probe and as the
/// reported bound next to the measured tangential drift.
double tangential_drift_bound(std::uint64_t n, const ScheduleParams& p,
                              const RegularityTriple& r);

}  // namespace sgdlab
