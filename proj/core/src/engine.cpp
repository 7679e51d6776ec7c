#include "devsplit/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "devsplit/errors.hpp"

namespace devsplit {

namespace {

Vector gaussian(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (auto& e : v) e = normal(rng);
  return v;
}

}  // namespace

Deviation ZeroPolicy::propose(const StepRecord& record, double, const DerivedParams&,
                              const Metric&) {
  const auto d = record.x.size();
  return {Vector::Zero(d), Vector::Zero(d)};
}

ClipPolicy::ClipPolicy(std::shared_ptr<DeviationPolicy> inner) : inner_(std::move(inner)) {
  if (!inner_) throw UsageError("ClipPolicy needs an inner policy");
}

Deviation ClipPolicy::propose(const StepRecord& record, double budget, const DerivedParams& next,
                              const Metric& m) {
  Deviation d = inner_->propose(record, budget, next, m);
  const double lhs = safeguard_lhs(d.u, d.v, next, m);
  if (lhs > budget) {
    const double scale = budget > 0.0 ? std::sqrt(budget / lhs) : 0.0;
    d.u *= scale;
    d.v *= scale;
  }
  return d;
}

RandomDirectionPolicy::RandomDirectionPolicy(std::uint64_t seed, double max_fraction)
    : rng_(seed), max_fraction_(max_fraction) {
  if (!(max_fraction >= 0.0)) throw UsageError("max_fraction must be nonnegative");
}

Deviation RandomDirectionPolicy::propose(const StepRecord& record, double budget,
                                         const DerivedParams& next, const Metric& m) {
  const int d = static_cast<int>(record.x.size());
  Deviation dev{gaussian(rng_, d), gaussian(rng_, d)};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double target = unit(rng_) * max_fraction_ * std::max(budget, 0.0);
  const double lhs = safeguard_lhs(dev.u, dev.v, next, m);
  const double scale = lhs > 0.0 ? std::sqrt(target / lhs) : 0.0;
  dev.u *= scale;
  dev.v *= scale;
  return dev;
}

// ---------------------------------------------------------------------------

double safeguard_lhs(const Vector& u, const Vector& v, const DerivedParams& next,
                     const Metric& m) {
  return (next.lambda + next.mu) * (next.theta_tilde / next.theta_hat * norm_m_squared(m, u) +
                                    next.theta_hat / next.theta * norm_m_squared(m, v));
}

Vector ell_norm_argument(const StepRecord& r) {
  const DerivedParams& d = r.params;
  const double gb = d.gamma_beta_bar();
  return r.p - r.x + d.alpha * (r.x - r.prev_p) + (gb * d.lambda * d.lambda / d.theta_hat) * r.u -
         (2.0 * d.theta_bar / d.theta) * r.v;
}

double compute_ell(const StepRecord& r, const Metric& m) {
  const DerivedParams& d = r.params;
  const Vector w = ell_norm_argument(r);
  double ell = (d.theta / 2.0) * norm_m_squared(m, w);
  if (d.mu != 0.0) {
    const Vector g = (r.z - r.p) / d.gamma - (r.prev_z - r.prev_p) / d.gamma_prev;
    ell += 2.0 * d.mu * d.gamma * inner_m(m, g, r.p - r.prev_p);
    const Vector h = r.p - r.y - (r.prev_p - r.prev_y);
    ell += (d.mu * d.gamma * d.beta_bar / 2.0) * norm_m_squared(m, h);
  }
  return ell;
}

SolverState init(const ProblemInstance& problem, const Schedule& schedule, const Vector& x0,
                 Index validation_horizon) {
  problem.validate(schedule.gamma(0));
  if (x0.size() != problem.dim()) {
    throw UsageError("x0 has dimension " + std::to_string(x0.size()) + ", problem has " +
                     std::to_string(problem.dim()));
  }
  require_finite(x0, "x0");
  const ValidationReport report =
      validate_schedule(schedule, problem.beta(), validation_horizon);
  if (!report.ok()) {
    throw ConfigError("schedule violates the parameter assumptions", report.failures());
  }
  SolverState s;
  s.n = 0;
  s.x = x0;
  s.u = Vector::Zero(x0.size());
  s.v = Vector::Zero(x0.size());
  s.prev_y = x0;
  s.prev_z = x0;
  s.prev_p = x0;
  s.gamma_prev = schedule.gamma(0);
  s.ell_prev = 0.0;
  return s;
}

StepRecord step(SolverState& state, const ProblemInstance& problem, const Schedule& schedule,
                DeviationPolicy& policy, const StepOptions& options) {
  StepRecord r;
  r.n = state.n;
  r.params = params(schedule, state.n);
  r.next_params = params(schedule, state.n + 1);
  const DerivedParams& d = r.params;
  const double gb = d.gamma_beta_bar();

  r.x = state.x;
  r.u = state.u;
  r.v = state.v;
  r.prev_y = state.prev_y;
  r.prev_z = state.prev_z;
  r.prev_p = state.prev_p;
  r.ell_prev = state.ell_prev;

  r.y = r.x + d.alpha * (r.prev_y - r.x) + r.u;
  r.z = r.x + d.alpha * (r.prev_p - r.x) + d.alpha_bar * (r.prev_z - r.prev_p) +
        (d.theta_bar * gb / d.theta_hat) * r.u + r.v;
  Vector rhs = problem.metric.apply(r.z);
  rhs.noalias() -= d.gamma * problem.c->eval(r.y);
  r.p = problem.a->resolvent(problem.metric, d.gamma, rhs);
  r.x_next = r.x + d.lambda * (r.p - r.z) + d.alpha_bar * d.lambda * (r.prev_z - r.prev_p);

  r.ell = compute_ell(r, problem.metric);
  r.budget = schedule.zeta(state.n + 1) * r.ell;
  Deviation dev = policy.propose(r, r.budget, r.next_params, problem.metric);
  if (dev.u.size() != r.x.size() || dev.v.size() != r.x.size()) {
    throw UsageError("deviation policy returned vectors of the wrong dimension");
  }
  r.safeguard_lhs = safeguard_lhs(dev.u, dev.v, r.next_params, problem.metric);
  if (options.enforce_safeguard) {
    const double slack = 1e-12 * std::max(1.0, std::abs(r.budget));
    if (!(r.safeguard_lhs <= r.budget + slack)) {
      throw SafeguardViolation("deviation at n=" + std::to_string(state.n + 1) +
                                   " exceeds the safeguard budget",
                               r.safeguard_lhs, r.budget);
    }
  }
  r.u_next = std::move(dev.u);
  r.v_next = std::move(dev.v);

  state.n += 1;
  state.x = r.x_next;
  state.u = r.u_next;
  state.v = r.v_next;
  state.prev_y = r.y;
  state.prev_z = r.z;
  state.prev_p = r.p;
  state.gamma_prev = d.gamma;
  state.ell_prev = r.ell;
  return r;
}

// ---------------------------------------------------------------------------

RunMonitor::RunMonitor(const ProblemInstance& problem, const StoppingRule& stop,
                       const RunOptions& options, std::string algo)
    : problem_(problem), stop_(stop), options_(options) {
  record_.algo = std::move(algo);
  if (stop_.max_iter < 0) throw UsageError("max_iter must be nonnegative");
  if (options_.trace_stride < 1) throw UsageError("trace stride must be at least 1");
  if (stop_.dist_tol && !problem_.solution) {
    throw ConfigError("distance tolerance requires a problem with a known solution");
  }
  stride_ = options_.trace_stride;
  wants_rows_ = static_cast<bool>(options_.row_observer) ||
                static_cast<bool>(options_.step_observer);
}

double RunMonitor::dist_of(const Vector& p) const {
  if (!problem_.solution) return std::numeric_limits<double>::quiet_NaN();
  if (stop_.dist_norm == DistNorm::metric) return norm_m(problem_.metric, p - *problem_.solution);
  return (p - *problem_.solution).norm();
}

double RunMonitor::fp_of(const Vector& p, const Vector& y) const {
  if (problem_.metric.is_identity()) return (p - y).norm();
  return norm_m(problem_.metric, p - y);
}

void RunMonitor::emit(TraceRow&& row) {
  if (options_.sink) options_.sink(row);
  if (!options_.retain_trace) return;
  auto& trace = record_.trace;
  if (options_.retain_limit > 0 && trace.size() >= std::max<std::size_t>(options_.retain_limit, 2)) {
    // Halve the retained rows and the sampling rate.
    std::size_t kept = 0;
    for (std::size_t i = 0; i < trace.size(); i += 2) trace[kept++] = std::move(trace[i]);
    trace.resize(kept);
    stride_ *= 2;
  }
  trace.push_back(std::move(row));
}

bool RunMonitor::observe(Index n, const Vector& p, const Vector& y,
                         const std::function<void(TraceRow&)>& extra) {
  bool stop_here = false;
  double dist = std::numeric_limits<double>::quiet_NaN();
  double fp = std::numeric_limits<double>::quiet_NaN();
  if (stop_.dist_tol) {
    dist = dist_of(p);
    if (dist <= *stop_.dist_tol) stop_here = true;
  }
  if (stop_.fp_tol) {
    fp = fp_of(p, y);
    if (fp <= *stop_.fp_tol) stop_here = true;
  }
  last_n_ = n;
  last_p_ = p;
  last_y_ = y;
  record_.iterations = n + 1;
  record_.converged = stop_here;

  const bool emitting = n % stride_ == 0 || stop_here;
  pending_last_.reset();
  last_emitted_ = false;
  if (wants_rows_ || emitting) {
    TraceRow row;
    row.n = n;
    row.p = p;
    row.y = y;
    row.dist = stop_.dist_tol ? dist : dist_of(p);
    row.fp_res = stop_.fp_tol ? fp : fp_of(p, y);
    if (extra) extra(row);
    if (options_.row_observer) options_.row_observer(row);
    if (emitting) {
      emit(std::move(row));
      last_emitted_ = true;
    } else {
      pending_last_ = std::move(row);
    }
  }
  return stop_here;
}

RunRecord RunMonitor::finish() {
  if (last_n_ < 0) return std::move(record_);
  if (!last_emitted_) {
    TraceRow row;
    if (pending_last_) {
      row = std::move(*pending_last_);
      pending_last_.reset();
    } else {
      row.n = last_n_;
      row.p = last_p_;
      row.y = last_y_;
      row.dist = dist_of(last_p_);
      row.fp_res = fp_of(last_p_, last_y_);
    }
    emit(std::move(row));
    last_emitted_ = true;
  }
  record_.final_p = last_p_;
  record_.final_y = last_y_;
  record_.final_dist = dist_of(last_p_);
  record_.final_fp_res = fp_of(last_p_, last_y_);
  return std::move(record_);
}

RunRecord run(const ProblemInstance& problem, const Schedule& schedule, DeviationPolicy& policy,
              const Vector& x0, const StoppingRule& stop, const RunOptions& options) {
  SolverState state = init(problem, schedule, x0);
  RunMonitor monitor(problem, stop, options, "general");
  StepOptions step_options;
  step_options.enforce_safeguard = options.enforce_safeguard;
  for (Index n = 0; n < stop.max_iter; ++n) {
    const StepRecord rec = step(state, problem, schedule, policy, step_options);
    std::function<void(TraceRow&)> extra;
    if (options.step_observer) {
      extra = [&](TraceRow& row) { options.step_observer(rec, row); };
    }
    if (monitor.observe(n, rec.p, rec.y, extra)) break;
  }
  return monitor.finish();
}

}  // namespace devsplit
