#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include "devsplit/engine.hpp"
#include "devsplit/variants.hpp"

namespace devsplit {

/// phi_n = <(z_n - p_n)/gamma_n, p_n - x_star>_M + (beta_bar/4) ||y_n - p_n||_M^2
double phi(const StepRecord& r, const Vector& x_star, const Metric& m);
std::optional<double> phi(const StepRecord& r, const std::optional<Vector>& x_star,
                          const Metric& m);

/// V_0 = ||x0 - x_star||_M^2
double lyapunov_V0(const Vector& x0, const Vector& x_star, const Metric& m);

/// V_{n+1} = ||x_{n+1} - x_star||_M^2 + 2 lambda_{n+1} gamma_{n+1} alpha_{n+1} phi_n + ell_n
double lyapunov_V(const StepRecord& r, const Vector& x_star, const Metric& m);

/// Residual of the exact Lyapunov identity for step n given V_n:
/// V_{n+1} - V_n + 2 gamma_n (lambda_n - alpha_bar_{n+1} lambda_{n+1}) phi_n
///   + ell_{n-1} - (lambda_n + mu_n)(theta_tilde/theta_hat ||u_n||^2 + theta_hat/theta ||v_n||^2).
double identity_residual_delta(const StepRecord& r, double v_n, const Vector& x_star,
                               const Metric& m);

/// V_n - V_{n+1} - 2 gamma_n (lambda_n - alpha_bar_{n+1} lambda_{n+1}) phi_n
///   - (1 - zeta_n) ell_{n-1}; nonnegative for admissible deviations.
double descent_check(const StepRecord& r, double v_n, double zeta_n, const Vector& x_star,
                     const Metric& m);

/// 2 lambda0 ||x0 - x_star||_M^2 / ((4 - gamma beta_bar - 2 lambda0) lambda_n^2) - ||w_n||_M^2,
/// where w_n is the ell_n norm argument. Unavailable (nullopt) unless lambda
/// grows without bound.
std::optional<double> bound_check_unbounded_lambda(const StepRecord& r, const Schedule& s,
                                                   const Vector& x0, const Vector& x_star,
                                                   const Metric& m);

struct EllArgumentForms {
  Vector w1;  // ell_n norm argument
  Vector w2;  // expansion in the raw iterates
  Vector w3;  // expansion through x_{n+1} - x_n
  double max_pairwise_gap = 0.0;
};

/// Three algebraically equal expressions of the ell_n norm argument.
EllArgumentForms ell_argument_forms(const StepRecord& r);

/// 2 ||y0 - x_star||_M^2 / (gamma^2 (4 - c - 2 lambda0) lambda0 (1+n)^{2e})
///   - ||(p_n - y_n)/gamma||_M^2 for the tunable variant.
double tunable_rate_slack(const VariantConfig& cfg, Index n, const Vector& p, const Vector& y,
                          const Vector& y0, const Vector& x_star, const Metric& m);

/// 4 ||y0 - x_star||_M^2 / (1+n)^2 - ||p_n - y_n||_M^2 for anchored runs.
double halpern_rate_slack(Index n, const Vector& p, const Vector& y, const Vector& y0,
                          const Vector& x_star, const Metric& m);

struct LyapunovRecord {
  Index n = 0;
  double V = 0.0;       // V_n
  double V_next = 0.0;  // V_{n+1}
  double phi = 0.0;
  double ell = 0.0;
  double delta = 0.0;
  double descent_slack = 0.0;
  double lemma_gap = 0.0;
  std::optional<double> bound_slack;
};

/// Worst values over a run, normalized where a tolerance scale applies.
struct LyapunovSummary {
  Index steps = 0;
  double V0 = 0.0;
  // max |delta_n| / max(1, V_n)
  double max_rel_delta = 0.0;
  double min_descent_slack = std::numeric_limits<double>::infinity();
  double min_ell = std::numeric_limits<double>::infinity();
  double min_phi = std::numeric_limits<double>::infinity();
  double min_V = std::numeric_limits<double>::infinity();
  // max (V_{n+1} - V_n)
  double max_V_increase = -std::numeric_limits<double>::infinity();
  // max (ell_n - V_{n+1}) and max (V_{n+1} - V_0)
  double max_ell_over_V = -std::numeric_limits<double>::infinity();
  double max_V_over_V0 = -std::numeric_limits<double>::infinity();
  double max_lemma_rel_gap = 0.0;
  std::optional<double> min_bound_slack;
  // Partial sums over the run; reported only.
  double sum_ell = 0.0;
  double sum_phi = 0.0;
  double sum_fp_sq = 0.0;

  double tolerance() const { return 1e-10 * std::max(1.0, V0); }
  // Identity holds to 1e-8 relative; inequalities to tolerance().
  bool identity_ok(double rel_tol = 1e-8) const { return max_rel_delta <= rel_tol; }
  bool inequalities_ok() const;
};

/// Feeds consecutive step records of one run and tracks every Lyapunov
/// quantity. Without a known solution only ell and the ell-argument form gap are tracked.
class LyapunovTracker {
 public:
  LyapunovTracker(const ProblemInstance& problem, const Schedule& schedule, const Vector& x0,
                  std::optional<Vector> x_star);

  bool has_solution() const noexcept { return x_star_.has_value(); }
  LyapunovRecord observe(const StepRecord& r);
  const LyapunovSummary& summary() const noexcept { return summary_; }

 private:
  const ProblemInstance& problem_;
  const Schedule& schedule_;
  Vector x0_;
  std::optional<Vector> x_star_;
  double v_current_ = 0.0;
  LyapunovSummary summary_;
};

/// step_observer filling V, ell and delta columns of the trace.
std::function<void(const StepRecord&, TraceRow&)> make_trace_observer(
    std::shared_ptr<LyapunovTracker> tracker);

}  // namespace devsplit
