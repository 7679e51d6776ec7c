#include "devsplit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "devsplit/bench.hpp"
#include "devsplit/diagnostics.hpp"
#include "devsplit/engine.hpp"
#include "devsplit/errors.hpp"
#include "devsplit/fuzz.hpp"
#include "devsplit/variants.hpp"

namespace devsplit::bench {

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

namespace {

VerifyCheck upper_check(std::string name, double worst, double tol) {
  return {std::move(name), worst, tol, true, worst <= tol};
}

VerifyCheck lower_check(std::string name, double worst, double tol) {
  return {std::move(name), worst, tol, false, worst >= -tol};
}

VerifyReport lyapunov_suite(int trials, std::uint64_t seed, int dim, int steps) {
  VerifyReport report;
  double max_delta = 0.0;
  double min_descent = std::numeric_limits<double>::infinity();
  double min_ell = min_descent;
  double min_phi = min_descent;
  double min_v = min_descent;
  double max_v_increase = -min_descent;
  double max_ell_over_v = -min_descent;
  double max_v_over_v0 = -min_descent;
  double max_sum_ell = 0.0;
  for (int t = 0; t < trials; ++t) {
    const FuzzCase fc = random_case(seed + static_cast<std::uint64_t>(t), dim);
    SolverState state = init(fc.problem, fc.schedule, fc.x0);
    ClipPolicy policy(std::make_shared<RandomDirectionPolicy>(seed ^ (0x9e3779b97f4a7c15ULL + t)));
    LyapunovTracker tracker(fc.problem, fc.schedule, fc.x0, fc.problem.solution);
    for (int n = 0; n < steps; ++n) {
      tracker.observe(step(state, fc.problem, fc.schedule, policy));
    }
    const LyapunovSummary& s = tracker.summary();
    const double scale = std::max(1.0, s.V0);
    max_delta = std::max(max_delta, s.max_rel_delta);
    min_descent = std::min(min_descent, s.min_descent_slack / scale);
    min_ell = std::min(min_ell, s.min_ell / scale);
    min_phi = std::min(min_phi, s.min_phi / scale);
    min_v = std::min(min_v, s.min_V / scale);
    max_v_increase = std::max(max_v_increase, s.max_V_increase / scale);
    max_ell_over_v = std::max(max_ell_over_v, s.max_ell_over_V / scale);
    max_v_over_v0 = std::max(max_v_over_v0, s.max_V_over_V0 / scale);
    max_sum_ell = std::max(max_sum_ell, s.sum_ell / scale);
  }
  report.checks.push_back(upper_check("|delta_n| / max(1, V_n)", max_delta, 1e-8));
  report.checks.push_back(lower_check("descent slack / max(1, V0)", min_descent, 1e-10));
  report.checks.push_back(lower_check("ell_n / max(1, V0)", min_ell, 1e-10));
  report.checks.push_back(lower_check("phi_n / max(1, V0)", min_phi, 1e-10));
  report.checks.push_back(lower_check("V_n / max(1, V0)", min_v, 1e-10));
  report.checks.push_back(upper_check("(V_{n+1} - V_n) / max(1, V0)", max_v_increase, 1e-10));
  report.checks.push_back(upper_check("(ell_n - V_{n+1}) / max(1, V0)", max_ell_over_v, 1e-10));
  report.checks.push_back(upper_check("(V_{n+1} - V0) / max(1, V0)", max_v_over_v0, 1e-10));
  std::ostringstream note;
  note << "largest partial sum of ell_n / max(1, V0): " << max_sum_ell;
  report.notes.push_back(note.str());
  return report;
}

VerifyReport identities_suite(int trials, std::uint64_t seed, int dim) {
  VerifyReport report;
  std::mt19937_64 rng(seed);
  double worst_identity = 0.0;
  double worst_bound = std::numeric_limits<double>::infinity();
  double worst_gap = 0.0;
  std::string failing;
  for (int t = 0; t < trials; ++t) {
    const FuzzCase fc = random_case(seed + static_cast<std::uint64_t>(t), dim);
    const Index n = std::uniform_int_distribution<Index>(0, 500)(rng);
    const ValidationReport ids = check_param_identities(fc.schedule, n);
    for (std::size_t i = 0; i < ids.items.size(); ++i) {
      const ReportItem& item = ids.items[i];
      if (i < 3) {
        const DerivedParams d = params(fc.schedule, n);
        const double scale = i == 2 ? std::max(1.0, d.lambda * d.lambda * std::abs(d.theta))
                                    : std::max(1.0, std::abs(d.theta));
        worst_identity = std::max(worst_identity, item.worst / scale);
      } else {
        worst_bound = std::min(worst_bound, item.passed ? 0.0 : item.worst);
      }
      if (!item.passed && failing.empty()) failing = item.name + " " + item.detail;
    }

    // A random state at index n, advanced one step with random deviations.
    const int d = fc.problem.dim();
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
      Vector v(d);
      for (auto& e : v) e = normal(rng);
      return v;
    };
    SolverState st;
    st.n = n;
    st.x = draw();
    st.u = draw();
    st.v = draw();
    st.prev_y = draw();
    st.prev_z = draw();
    st.prev_p = draw();
    st.gamma_prev = fc.schedule.gamma(n - 1);
    ZeroPolicy zero;
    const StepRecord r = step(st, fc.problem, fc.schedule, zero, StepOptions{false});
    const EllArgumentForms forms = ell_argument_forms(r);
    worst_gap = std::max(worst_gap, forms.max_pairwise_gap / (1.0 + forms.w1.norm()));
  }
  report.checks.push_back(upper_check("theta identities, relative residual", worst_identity, 1e-10));
  report.checks.push_back(lower_check("parameter ratio bounds, worst violation", worst_bound, 0.0));
  report.checks.push_back(upper_check("ell-argument forms, relative gap", worst_gap, 1e-10));
  if (!failing.empty()) report.notes.push_back("first failing item: " + failing);
  return report;
}

VerifyReport rates_suite(int trials, std::uint64_t seed, int steps) {
  VerifyReport report;
  const ProblemInstance skew = problem_skew2d();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  double worst_tunable = std::numeric_limits<double>::infinity();
  double worst_halpern = worst_tunable;
  for (int t = 0; t < trials; ++t) {
    Vector y0(2);
    y0 << normal(rng), normal(rng);
    for (double e : {0.25, 0.5, 0.75, 1.0}) {
      const VariantConfig cfg = make_tunable(e);
      RunOptions opt;
      opt.retain_trace = false;
      opt.row_observer = [&](TraceRow& row) {
        worst_tunable = std::min(
            worst_tunable, tunable_rate_slack(cfg, row.n, row.p, row.y, y0, *skew.solution,
                                              skew.metric));
      };
      StoppingRule stop;
      stop.max_iter = steps;
      run_tunable(cfg, skew, y0, stop, opt);
    }
    std::mt19937_64 prng(seed + static_cast<std::uint64_t>(t));
    const int dim = std::uniform_int_distribution<int>(2, 6)(prng);
    ProblemInstance anchored = random_problem(prng, dim);
    anchored.a = make_zero_monotone(dim);
    const Matrix q = static_cast<const QuadGradOp&>(*anchored.c).matrix();
    const Vector x_star = *anchored.solution;
    anchored.c = make_quad_grad(q, -q * x_star, anchored.c->beta());
    if (!(anchored.beta() > 0.0)) continue;
    const VariantConfig cfg = make_halpern(anchored.beta());
    Vector h0(dim);
    for (auto& e : h0) e = normal(rng);
    RunOptions opt;
    opt.retain_trace = false;
    opt.row_observer = [&](TraceRow& row) {
      worst_halpern = std::min(worst_halpern, halpern_rate_slack(row.n, row.p, row.y, h0, x_star,
                                                                 anchored.metric));
    };
    StoppingRule stop;
    stop.max_iter = steps;
    run_halpern(cfg, anchored, h0, stop, opt);
  }
  report.checks.push_back(lower_check("tunable rate envelope slack", worst_tunable, 1e-9));
  report.checks.push_back(lower_check("anchored rate envelope slack", worst_halpern, 1e-9));
  return report;
}

}  // namespace

VerifyReport verify_suite(const std::string& suite, int trials, std::uint64_t seed, int dim,
                          int steps) {
  if (trials < 1) throw ConfigError("verify needs at least one trial");
  if (dim < 0) throw ConfigError("verify dimension must be nonnegative");
  VerifyReport report;
  if (suite == "lyapunov") {
    report = lyapunov_suite(trials, seed, dim, steps);
  } else if (suite == "identities") {
    report = identities_suite(trials, seed, dim);
  } else if (suite == "rates") {
    report = rates_suite(trials, seed, steps);
  } else {
    throw ConfigError("unknown verify suite '" + suite + "'");
  }
  report.suite = suite;
  report.trials = trials;
  return report;
}

}  // namespace devsplit::bench
