#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace devsplit {

using Index = std::int64_t;

/// Growth profile f with lambda_n = f(n) lambda0.
///
/// Admissible profiles satisfy f(0) = 1, are non-decreasing and concave, and
/// grow at most linearly. validate_growth checks this on an integer grid.
struct GrowthFunction {
  std::function<double(double)> eval;
  double derivative_at_zero = 0.0;
  std::string label;
  // lambda_n -> infinity; enables the unbounded-lambda residual bound.
  bool unbounded = false;
  // Set for (1+n)^e profiles, so runners can use the exponent directly.
  std::optional<double> exponent;

  double operator()(double n) const { return eval(n); }
};

GrowthFunction growth_constant();
GrowthFunction growth_linear();
GrowthFunction growth_power(double e);
// log(n + 2) / log(2)
GrowthFunction growth_log();

/// User-facing parameter sequences of the deviation-based FB method.
struct Schedule {
  double lambda0 = 1.0;
  GrowthFunction growth = growth_constant();
  double gamma0 = 0.1;
  // Per-n step size; empty means constant gamma0.
  std::function<double(Index)> gamma_rule;
  // Per-n safeguard fraction; empty means zeta_n = 1 - eps0.
  std::function<double(Index)> zeta_rule;
  // Per-n momentum coefficient, used by the parallel-deviation family.
  std::function<double(Index)> kappa_rule;
  double beta_bar = 0.001;
  double eps = 1e-9;
  double eps0 = 0.0;
  double eps1 = 0.0;

  double lambda(Index n) const { return lambda0 * growth(static_cast<double>(n)); }
  // gamma(-1) is gamma(0).
  double gamma(Index n) const {
    if (n < 0) n = 0;
    return gamma_rule ? gamma_rule(n) : gamma0;
  }
  double zeta(Index n) const { return zeta_rule ? zeta_rule(n) : 1.0 - eps0; }
  double kappa(Index n) const { return kappa_rule ? kappa_rule(n) : 0.0; }
  double mu(Index n) const;
  bool constant_gamma() const { return !gamma_rule; }
};

/// Parameters of iteration n derived from the schedule.
struct DerivedParams {
  Index n = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double gamma_prev = 0.0;
  double beta_bar = 0.0;
  double alpha = 0.0;
  double alpha_bar = 0.0;
  double theta = 0.0;
  double theta_hat = 0.0;
  double theta_bar = 0.0;
  double theta_tilde = 0.0;
  double theta_prime = 0.0;
  double omega = 0.0;

  double gamma_beta_bar() const { return gamma * beta_bar; }
};

/// mu_n = lambda_n^2 / lambda0 - lambda_n.
double mu_of(const Schedule& s, Index n);

/// Step-2 definitions evaluated from raw scalars.
DerivedParams derived_general(double lambda, double mu, double gamma, double gamma_prev,
                              double beta_bar);
/// Step-2 definitions at index n with a caller-supplied mu_n.
DerivedParams derived_general(const Schedule& s, Index n, double mu);
/// Closed forms valid when mu_n = mu_of(s, n).
DerivedParams derived_closed_form(const Schedule& s, Index n);
/// derived_general(s, n, mu_of(s, n)); the parameters every runner uses.
DerivedParams params(const Schedule& s, Index n);

struct ReportItem {
  std::string name;
  bool passed = true;
  std::string detail;
  // Worst observed value of the checked quantity (residual or slack).
  double worst = 0.0;
};

struct ValidationReport {
  std::vector<ReportItem> items;
  // Filled by validate_growth.
  std::optional<double> derivative_at_zero;
  std::optional<double> eps1_max;

  bool ok() const;
  std::vector<std::string> failures() const;
  const ReportItem* find(const std::string& name) const;
};

/// Checks items (i)-(iv) of the standing parameter assumption for
/// n = 0..horizon: zeta range, gamma beta_bar range, lambda monotonicity with
/// bounded gamma lambda increments, and beta_bar >= beta.
ValidationReport validate_schedule(const Schedule& s, double beta, Index horizon);

/// Grid checks of the growth-function invariants on 0..horizon. When
/// f'(0) < 1 the largest admissible eps1 = (1 - f'(0)) gamma lambda0 is reported.
ValidationReport validate_growth(const GrowthFunction& f, Index horizon, double gamma = 1.0,
                                 double lambda0 = 1.0);

/// Residuals of the three theta identities at index n plus the positivity
/// lower bounds and boundedness upper bounds of the parameter ratios.
ValidationReport check_param_identities(const Schedule& s, Index n);

}  // namespace devsplit
