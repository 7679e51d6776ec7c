#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "devsplit/metric.hpp"
#include "devsplit/operators.hpp"
#include "devsplit/schedules.hpp"

namespace devsplit {

/// Iterate bundle of the deviation-based FB method at the start of iteration n.
///
/// prev_* hold y_{n-1}, z_{n-1}, p_{n-1}; at n = 0 they all equal x0.
struct SolverState {
  Index n = 0;
  Vector x;
  Vector u;
  Vector v;
  Vector prev_y;
  Vector prev_z;
  Vector prev_p;
  double gamma_prev = 0.0;
  double ell_prev = 0.0;
};

/// Everything computed during iteration n, kept for diagnostics.
struct StepRecord {
  Index n = 0;
  Vector x;  // x_n
  Vector y;  // y_n
  Vector z;  // z_n
  Vector p;  // p_n
  Vector u;  // u_n
  Vector v;  // v_n
  Vector prev_y;
  Vector prev_z;
  Vector prev_p;
  Vector x_next;
  Vector u_next;
  Vector v_next;
  double ell = 0.0;
  double ell_prev = 0.0;
  double budget = 0.0;  // zeta_{n+1} ell_n
  double safeguard_lhs = 0.0;
  DerivedParams params;       // iteration n
  DerivedParams next_params;  // iteration n+1
};

struct Deviation {
  Vector u;
  Vector v;
};

/// Chooses (u_{n+1}, v_{n+1}) after iteration n. The record holds u_next and
/// v_next unset; `budget` is zeta_{n+1} ell_n and `next` the parameters used
/// to measure the proposal.
class DeviationPolicy {
 public:
  virtual ~DeviationPolicy() = default;
  virtual Deviation propose(const StepRecord& record, double budget, const DerivedParams& next,
                            const Metric& m) = 0;
};

class ZeroPolicy final : public DeviationPolicy {
 public:
  Deviation propose(const StepRecord& record, double budget, const DerivedParams& next,
                    const Metric& m) override;
};

/// Rescales the inner proposal by sqrt(budget / lhs) whenever it exceeds the
/// safeguard budget.
class ClipPolicy final : public DeviationPolicy {
 public:
  explicit ClipPolicy(std::shared_ptr<DeviationPolicy> inner);
  Deviation propose(const StepRecord& record, double budget, const DerivedParams& next,
                    const Metric& m) override;

 private:
  std::shared_ptr<DeviationPolicy> inner_;
};

/// Gaussian directions for u and v, scaled so that the safeguard left-hand
/// side equals a uniform fraction in [0, max_fraction] of the budget.
/// max_fraction > 1 produces deliberately inadmissible deviations.
class RandomDirectionPolicy final : public DeviationPolicy {
 public:
  explicit RandomDirectionPolicy(std::uint64_t seed, double max_fraction = 1.0);
  Deviation propose(const StepRecord& record, double budget, const DerivedParams& next,
                    const Metric& m) override;

 private:
  std::mt19937_64 rng_;
  double max_fraction_;
};

/// Proposes the next deviations directly as a function of the record; handy
/// for tests and user-defined heuristics.
class FunctionPolicy final : public DeviationPolicy {
 public:
  using Fn = std::function<Deviation(const StepRecord&, double, const DerivedParams&,
                                     const Metric&)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
  Deviation propose(const StepRecord& record, double budget, const DerivedParams& next,
                    const Metric& m) override {
    return fn_(record, budget, next, m);
  }

 private:
  Fn fn_;
};

/// (lambda + mu)(theta_tilde/theta_hat ||u||_M^2 + theta_hat/theta ||v||_M^2)
/// with the parameters of iteration n+1.
double safeguard_lhs(const Vector& u, const Vector& v, const DerivedParams& next,
                     const Metric& m);

/// p_n - x_n + alpha_n (x_n - p_{n-1}) + (gamma beta_bar lambda^2/theta_hat) u_n
///   - (2 theta_bar/theta) v_n
Vector ell_norm_argument(const StepRecord& r);

/// The nonnegative quantity ell_n bounding the next safeguard budget.
double compute_ell(const StepRecord& r, const Metric& m);

/// Builds the n = 0 state after validating the schedule against the problem.
/// Throws ConfigError listing every violated assumption item.
SolverState init(const ProblemInstance& problem, const Schedule& schedule, const Vector& x0,
                 Index validation_horizon = 10000);

struct StepOptions {
  bool enforce_safeguard = true;
};

/// One iteration; advances `state` to n+1 and returns the full snapshot.
/// Throws SafeguardViolation when the policy exceeds the budget beyond
/// 1e-12 max(1, budget).
StepRecord step(SolverState& state, const ProblemInstance& problem, const Schedule& schedule,
                DeviationPolicy& policy, const StepOptions& options = {});

// ---------------------------------------------------------------------------
// Runs

enum class DistNorm { euclidean, metric };

struct StoppingRule {
  Index max_iter = 50'000'000;
  // ||p_n - x_star|| <= dist_tol; needs a known solution.
  std::optional<double> dist_tol;
  // ||p_n - y_n||_M <= fp_tol
  std::optional<double> fp_tol;
  DistNorm dist_norm = DistNorm::euclidean;
};

struct TraceRow {
  Index n = 0;
  Vector p;
  Vector y;
  double dist = 0.0;  // NaN when no solution is known
  double fp_res = 0.0;
  std::optional<double> V;
  std::optional<double> ell;
  std::optional<double> delta;
};

struct RunRecord {
  std::string algo;
  // Number of FB evaluations performed; when converged, the index of the
  // first iterate meeting the tolerance plus one.
  Index iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;
  Vector final_p;
  Vector final_y;
  double final_dist = 0.0;
  double final_fp_res = 0.0;
};

using TraceSink = std::function<void(const TraceRow&)>;

struct RunOptions {
  // Keep every stride-th row (the last row is always kept).
  Index trace_stride = 1;
  bool retain_trace = true;
  // Bounded retention (0 = unlimited): when the retained trace reaches this
  // many rows, every other row is dropped and the stride doubles.
  std::size_t retain_limit = 0;
  TraceSink sink;
  // Called for every iterate of any runner, before the stride filter.
  std::function<void(TraceRow&)> row_observer;
  // Engine runs only: called for every step with its full record.
  std::function<void(const StepRecord&, TraceRow&)> step_observer;
  bool enforce_safeguard = true;
};

/// Shared stopping/trace bookkeeping for all runners.
class RunMonitor {
 public:
  RunMonitor(const ProblemInstance& problem, const StoppingRule& stop, const RunOptions& options,
             std::string algo);

  // Whether every iterate needs a materialized TraceRow.
  bool wants_rows() const noexcept { return wants_rows_; }

  // Registers iterate n; returns true when the run should stop here.
  bool observe(Index n, const Vector& p, const Vector& y,
               const std::function<void(TraceRow&)>& extra = {});

  RunRecord finish();

 private:
  double dist_of(const Vector& p) const;
  double fp_of(const Vector& p, const Vector& y) const;
  void emit(TraceRow&& row);

  const ProblemInstance& problem_;
  StoppingRule stop_;
  const RunOptions& options_;
  RunRecord record_;
  bool wants_rows_ = false;
  Index stride_ = 1;
  Index last_n_ = -1;
  Vector last_p_;
  Vector last_y_;
  std::optional<TraceRow> pending_last_;
  bool last_emitted_ = false;
};

/// Runs the general method from x0 until the stopping rule fires.
RunRecord run(const ProblemInstance& problem, const Schedule& schedule, DeviationPolicy& policy,
              const Vector& x0, const StoppingRule& stop, const RunOptions& options = {});

}  // namespace devsplit
