#include "devsplit/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "devsplit/errors.hpp"

namespace devsplit {

double phi(const StepRecord& r, const Vector& x_star, const Metric& m) {
  const DerivedParams& d = r.params;
  return inner_m(m, (r.z - r.p) / d.gamma, r.p - x_star) +
         (d.beta_bar / 4.0) * norm_m_squared(m, r.y - r.p);
}

std::optional<double> phi(const StepRecord& r, const std::optional<Vector>& x_star,
                          const Metric& m) {
  if (!x_star) return std::nullopt;
  return phi(r, *x_star, m);
}

double lyapunov_V0(const Vector& x0, const Vector& x_star, const Metric& m) {
  return norm_m_squared(m, x0 - x_star);
}

double lyapunov_V(const StepRecord& r, const Vector& x_star, const Metric& m) {
  const DerivedParams& nx = r.next_params;
  return norm_m_squared(m, r.x_next - x_star) +
         2.0 * nx.lambda * nx.gamma * nx.alpha * phi(r, x_star, m) + r.ell;
}

namespace {

double descent_weight(const StepRecord& r) {
  const DerivedParams& d = r.params;
  return 2.0 * d.gamma * (d.lambda - r.next_params.alpha_bar * r.next_params.lambda);
}

}  // namespace

double identity_residual_delta(const StepRecord& r, double v_n, const Vector& x_star,
                               const Metric& m) {
  const double v_next = lyapunov_V(r, x_star, m);
  return v_next - v_n + descent_weight(r) * phi(r, x_star, m) + r.ell_prev -
         safeguard_lhs(r.u, r.v, r.params, m);
}

double descent_check(const StepRecord& r, double v_n, double zeta_n, const Vector& x_star,
                     const Metric& m) {
  const double v_next = lyapunov_V(r, x_star, m);
  return v_n - v_next - descent_weight(r) * phi(r, x_star, m) - (1.0 - zeta_n) * r.ell_prev;
}

std::optional<double> bound_check_unbounded_lambda(const StepRecord& r, const Schedule& s,
                                                   const Vector& x0, const Vector& x_star,
                                                   const Metric& m) {
  if (!s.growth.unbounded) return std::nullopt;
  const DerivedParams& d = r.params;
  const double l0 = s.lambda0;
  const double bound = 2.0 * l0 * norm_m_squared(m, x0 - x_star) /
                       ((4.0 - d.gamma_beta_bar() - 2.0 * l0) * d.lambda * d.lambda);
  return bound - norm_m_squared(m, ell_norm_argument(r));
}

EllArgumentForms ell_argument_forms(const StepRecord& r) {
  const DerivedParams& d = r.params;
  const double c = d.gamma_beta_bar();
  EllArgumentForms out;
  out.w1 = r.p - (1.0 - d.alpha) * r.x - d.alpha * r.prev_p +
           (c * d.lambda * d.lambda / d.theta_hat) * r.u - (2.0 * d.theta_bar / d.theta) * r.v;
  out.w2 = r.p - (2.0 * d.theta_bar / d.theta) * r.z + (d.theta_tilde / d.theta) * r.y -
           (2.0 * d.lambda / d.theta) * r.x - (d.theta_prime / d.theta) * r.prev_p +
           (2.0 * d.theta_bar * d.alpha_bar / d.theta) * r.prev_z -
           (d.theta_tilde * d.alpha / d.theta) * r.prev_y;
  out.w3 = (1.0 / d.lambda) * (r.x_next - r.x) + (d.theta_tilde / d.theta_hat) * r.u +
           ((2.0 - c) * (d.lambda + d.mu) / d.theta) * r.v;
  out.max_pairwise_gap = std::max(
      {(out.w1 - out.w2).norm(), (out.w1 - out.w3).norm(), (out.w2 - out.w3).norm()});
  return out;
}

double tunable_rate_slack(const VariantConfig& cfg, Index n, const Vector& p, const Vector& y,
                          const Vector& y0, const Vector& x_star, const Metric& m) {
  const double c = cfg.gamma_beta_bar();
  const double l0 = cfg.lambda0;
  const double g = cfg.gamma;
  const double e = cfg.kind == VariantKind::tunable_e ? cfg.e : 1.0;
  const double bound = 2.0 * norm_m_squared(m, y0 - x_star) /
                       (g * g * (4.0 - c - 2.0 * l0) * l0 *
                        std::pow(1.0 + static_cast<double>(n), 2.0 * e));
  return bound - norm_m_squared(m, (p - y) / g);
}

double halpern_rate_slack(Index n, const Vector& p, const Vector& y, const Vector& y0,
                          const Vector& x_star, const Metric& m) {
  const double np1 = 1.0 + static_cast<double>(n);
  return 4.0 * norm_m_squared(m, y0 - x_star) / (np1 * np1) - norm_m_squared(m, p - y);
}

// ---------------------------------------------------------------------------

bool LyapunovSummary::inequalities_ok() const {
  const double tol = tolerance();
  if (steps == 0) return true;
  bool ok = min_ell >= -tol;
  if (std::isfinite(min_phi)) {
    ok = ok && min_phi >= -tol && min_V >= -tol && min_descent_slack >= -tol &&
         max_V_increase <= tol && max_ell_over_V <= tol && max_V_over_V0 <= tol;
  }
  return ok;
}

LyapunovTracker::LyapunovTracker(const ProblemInstance& problem, const Schedule& schedule,
                                 const Vector& x0, std::optional<Vector> x_star)
    : problem_(problem), schedule_(schedule), x0_(x0), x_star_(std::move(x_star)) {
  if (x_star_) {
    require_same_dim(x0_, *x_star_, "Lyapunov tracker solution");
    v_current_ = lyapunov_V0(x0_, *x_star_, problem_.metric);
    summary_.V0 = v_current_;
  }
}

LyapunovRecord LyapunovTracker::observe(const StepRecord& r) {
  const Metric& m = problem_.metric;
  LyapunovRecord rec;
  rec.n = r.n;
  rec.ell = r.ell;
  const EllArgumentForms lv = ell_argument_forms(r);
  rec.lemma_gap = lv.max_pairwise_gap;

  LyapunovSummary& s = summary_;
  s.steps += 1;
  s.min_ell = std::min(s.min_ell, r.ell);
  s.max_lemma_rel_gap = std::max(s.max_lemma_rel_gap, rec.lemma_gap / (1.0 + lv.w1.norm()));
  s.sum_ell += r.ell;
  s.sum_fp_sq += norm_m_squared(m, r.p - r.y);

  if (x_star_) {
    const Vector& xs = *x_star_;
    rec.V = v_current_;
    rec.phi = phi(r, xs, m);
    rec.V_next = lyapunov_V(r, xs, m);
    rec.delta = identity_residual_delta(r, rec.V, xs, m);
    rec.descent_slack = descent_check(r, rec.V, schedule_.zeta(r.n), xs, m);
    rec.bound_slack = bound_check_unbounded_lambda(r, schedule_, x0_, xs, m);

    s.max_rel_delta = std::max(s.max_rel_delta, std::abs(rec.delta) / std::max(1.0, rec.V));
    s.min_descent_slack = std::min(s.min_descent_slack, rec.descent_slack);
    s.min_phi = std::min(s.min_phi, rec.phi);
    s.min_V = std::min({s.min_V, rec.V, rec.V_next});
    s.max_V_increase = std::max(s.max_V_increase, rec.V_next - rec.V);
    s.max_ell_over_V = std::max(s.max_ell_over_V, r.ell - rec.V_next);
    s.max_V_over_V0 = std::max(s.max_V_over_V0, rec.V_next - s.V0);
    if (rec.bound_slack) {
      s.min_bound_slack = std::min(s.min_bound_slack.value_or(*rec.bound_slack), *rec.bound_slack);
    }
    s.sum_phi += rec.phi;
    v_current_ = rec.V_next;
  }
  return rec;
}

std::function<void(const StepRecord&, TraceRow&)> make_trace_observer(
    std::shared_ptr<LyapunovTracker> tracker) {
  if (!tracker) throw UsageError("trace observer needs a tracker");
  return [tracker](const StepRecord& r, TraceRow& row) {
    const LyapunovRecord rec = tracker->observe(r);
    row.ell = rec.ell;
    if (tracker->has_solution()) {
      row.V = rec.V;
      row.delta = rec.delta;
    }
  };
}

}  // namespace devsplit
