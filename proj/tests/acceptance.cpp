// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "devsplit/bench.hpp"
#include "devsplit/diagnostics.hpp"
#include "devsplit/engine.hpp"
#include "devsplit/fuzz.hpp"
#include "devsplit/variants.hpp"

using namespace devsplit;

namespace {

constexpr double kTableRelTol = 0.01;
constexpr Index kTableAbsTol = 3;
constexpr double kIdentityRelTol = 1e-8;
constexpr double kInequalityTol = 1e-10;
constexpr double kEquivalenceTol = 1e-10;
constexpr double kRateSlack = 1e-9;
constexpr double kSafeguardRelTol = 1e-10;
constexpr double kFbGapTol = 1e-12;
constexpr double kFormsRelTol = 1e-10;

const Vector kY0 = Vector::Constant(2, 3.0);

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

StoppingRule to_tol() {
  StoppingRule s;
  s.dist_tol = 1e-6;
  return s;
}

StoppingRule fixed_steps(Index n) {
  StoppingRule s;
  s.max_iter = n;
  return s;
}

bool count_ok(Index got, Index expect) {
  const double allowed =
      std::max(static_cast<double>(kTableAbsTol), kTableRelTol * static_cast<double>(expect));
  return std::abs(static_cast<double>(got - expect)) <= allowed;
}

Outcome table_check(const std::vector<double>& params, const std::vector<Index>& expect,
                    const std::function<Index(double)>& count, double budget_s) {
  const auto t0 = Clock::now();
  Outcome out{true, ""};
  Index worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Index got = count(params[i]);
    worst = std::max<Index>(worst, std::abs(got - expect[i]));
    if (!count_ok(got, expect[i])) {
      out.passed = false;
      out.detail += format("param %.2f: got %.0f expected %.0f; ", params[i],
                           static_cast<double>(got), static_cast<double>(expect[i]));
    }
  }
  const double secs = seconds_since(t0);
  if (secs > budget_s) out.passed = false;
  out.detail += format("max |count - table| = %.0f, %.2f s (budget %.0f s)",
                       static_cast<double>(worst), secs, budget_s);
  return out;
}

Index tunable_count(double e) {
  RunOptions opts;
  opts.retain_trace = false;
  return run_tunable(make_tunable(e), bench::problem_skew2d(), kY0, to_tol(), opts).iterations;
}

Index constant_kappa_count(double k) {
  RunOptions opts;
  opts.retain_trace = false;
  return run_constant_kappa(make_constant_kappa(k), bench::problem_skew2d(), kY0, to_tol(), opts)
      .iterations;
}

double trace_gap(const RunRecord& a, const RunRecord& b) {
  if (a.trace.size() != b.trace.size()) return INFINITY;
  double gap = 0.0;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    gap = std::max({gap, (a.trace[i].y - b.trace[i].y).norm(), (a.trace[i].p - b.trace[i].p).norm()});
  }
  return gap;
}

// Fuzz corpus shared by the Lyapunov identity and inequality criteria.
struct CorpusStats {
  int runs = 0;
  Index steps = 0;
  double max_rel_delta = 0.0;
  double worst_ineq = INFINITY;  // min normalized slack over all checked inequalities
  double secs = 0.0;
};

CorpusStats fuzz_corpus() {
  CorpusStats st;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    FuzzCase fc = random_case(seed);
    LyapunovTracker tracker(fc.problem, fc.schedule, fc.x0, fc.problem.solution);
    SolverState state = init(fc.problem, fc.schedule, fc.x0);
    ClipPolicy policy(std::make_shared<RandomDirectionPolicy>(seed * 7919 + 1, 1.0));
    for (int n = 0; n < 200; ++n) tracker.observe(step(state, fc.problem, fc.schedule, policy));
    const LyapunovSummary& s = tracker.summary();
    const double scale = std::max(1.0, s.V0);
    st.runs += 1;
    st.steps += s.steps;
    st.max_rel_delta = std::max(st.max_rel_delta, s.max_rel_delta);
    st.worst_ineq = std::min({st.worst_ineq, s.min_descent_slack / scale, s.min_ell / scale,
                              s.min_phi / scale, s.min_V / scale, -s.max_V_increase / scale,
                              -s.max_ell_over_V / scale, -s.max_V_over_V0 / scale});
  }
  st.secs = seconds_since(t0);
  return st;
}

Outcome lyapunov_identity(const CorpusStats& c) {
  Outcome out;
  out.passed = c.runs == 200 && c.steps >= 200 * 200 && c.max_rel_delta <= kIdentityRelTol &&
               c.secs < 60.0;
  out.detail = format("%.0f runs, max |delta|/max(1,V_n) = %.3g, %.2f s", c.runs,
                      c.max_rel_delta, c.secs);
  return out;
}

Outcome descent_inequality(const CorpusStats& c) {
  Outcome out;
  out.passed = c.runs == 200 && c.worst_ineq >= -kInequalityTol;
  out.detail = format("worst normalized slack over descent, ell, phi, V = %.3g (tol %.0e)",
                      c.worst_ineq, kInequalityTol);
  return out;
}

Outcome variant_equivalences() {
  const auto skew = bench::problem_skew2d();
  double a = 0.0;
  for (double k : {0.5, 0.9, -0.7}) {
    a = std::max(a, trace_gap(run_parallel_x_form(make_parallel(VariantKind::parallel_x_form, k),
                                                  skew, kY0, fixed_steps(500)),
                              run_parallel_y_form(make_parallel(VariantKind::parallel_y_form, k),
                                                  skew, kY0, fixed_steps(500))));
  }
  {
    const auto lq = bench::problem_linear_quad();
    auto cfg = make_parallel(VariantKind::parallel_x_form, 0.5, 0.8, growth_power(0.5), 0.1, 2.5);
    const Vector x0 = Vector::Constant(3, 1.5);
    const auto xf = run_parallel_x_form(cfg, lq, x0, fixed_steps(500));
    cfg.kind = VariantKind::parallel_y_form;
    a = std::max(a, trace_gap(xf, run_parallel_y_form(cfg, lq, x0, fixed_steps(500))));
  }

  const double b = trace_gap(run_tunable(make_tunable(1.0), skew, kY0, fixed_steps(5000)),
                             run_accelerated_fb(make_accelerated_fb(), skew, kY0, fixed_steps(5000)));

  const auto zq = bench::preset("zero-quad");
  const double beta = zq.beta();
  const double c = trace_gap(run_accelerated_fb(make_accelerated_fb(2.0 / beta, beta), zq, kY0,
                                                fixed_steps(1000)),
                             run_halpern(make_halpern(beta), zq, kY0, fixed_steps(1000)));

  double d = 0.0;
  for (double k : {0.5, -0.4}) {
    for (double l0 : {1.0, 0.6}) {
      const auto cfg = make_parallel(VariantKind::parallel_x_form, k, l0);
      const Schedule s = schedule_for(cfg);
      ParallelXFormStepper stepper(cfg, skew, kY0);
      ParallelDeviationPolicy policy(cfg);
      for (int n = 0; n < 200; ++n) {
        const EmbeddedState em = embed_to_general(cfg, stepper.state());
        SolverState st = em.state;
        const StepRecord r = step(st, skew, s, policy);
        const auto it = stepper.step();
        d = std::max({d, em.yz_gap, (r.y - it.y).norm(), (r.p - it.p).norm(),
                      (st.x - stepper.state().x).norm(), (st.u - stepper.state().u).norm()});
      }
    }
  }

  Outcome out;
  out.passed = a <= kEquivalenceTol && b <= kEquivalenceTol && c <= kEquivalenceTol &&
               d <= kEquivalenceTol;
  out.detail = format("x/y-form %.3g, tunable/accelerated %.3g, accelerated/anchored %.3g", a, b, c) +
               format(", embedding %.3g", d);
  return out;
}

ProblemInstance random_anchored_problem(std::mt19937_64& rng, int dim) {
  const Metric m = random_metric(rng, dim);
  Matrix q = random_psd_matrix(rng, dim);
  q += 0.05 * m.matrix();
  std::normal_distribution<double> g;
  Vector sol(dim);
  for (auto& e : sol) e = g(rng);
  return {make_zero_monotone(dim), make_quad_grad(q, -q * sol, cocoercivity_constant(q, m)), m,
          sol};
}

Outcome rate_envelopes() {
  const auto skew = bench::problem_skew2d();
  double tunable_worst = INFINITY;
  for (double e : {0.25, 0.5, 0.75, 1.0}) {
    const auto cfg = make_tunable(e);
    RunOptions opts;
    opts.retain_trace = false;
    opts.row_observer = [&](TraceRow& row) {
      tunable_worst = std::min(
          tunable_worst, tunable_rate_slack(cfg, row.n, row.p, row.y, kY0, *skew.solution, skew.metric));
    };
    StoppingRule stop = to_tol();
    stop.max_iter = 200000;
    run_tunable(cfg, skew, kY0, stop, opts);
  }

  double anchored_worst = INFINITY;
  auto anchored = [&](const ProblemInstance& p, const Vector& y0, Index steps) {
    RunOptions opts;
    opts.retain_trace = false;
    opts.row_observer = [&](TraceRow& row) {
      anchored_worst = std::min(
          anchored_worst, halpern_rate_slack(row.n, row.p, row.y, y0, *p.solution, p.metric));
    };
    run_halpern(make_halpern(p.beta()), p, y0, fixed_steps(steps), opts);
  };
  anchored(bench::preset("zero-quad"), kY0, 100000);
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 20; ++t) {
    const int dim = 2 + t % 7;
    const ProblemInstance p = random_anchored_problem(rng, dim);
    Vector y0(dim);
    std::normal_distribution<double> g(0.0, 3.0);
    for (auto& e : y0) e = g(rng);
    anchored(p, y0, 3000);
  }
  {
    // gamma beta_bar = 2, e = 1 on the skew problem through the general engine.
    const auto cfg = make_tunable(1.0, 2.0, 1.0);
    ParallelDeviationPolicy policy(cfg);
    RunOptions opts;
    opts.retain_trace = false;
    opts.step_observer = [&](const StepRecord& r, TraceRow&) {
      anchored_worst = std::min(
          anchored_worst, halpern_rate_slack(r.n, r.p, r.y, kY0, *skew.solution, skew.metric));
    };
    run(skew, schedule_for(cfg), policy, kY0, fixed_steps(20000), opts);
  }

  Outcome out;
  out.passed = tunable_worst >= -kRateSlack && anchored_worst >= -kRateSlack;
  out.detail = format("min slack: tunable %.3g, anchored %.3g (allowed -%.0e)", tunable_worst,
                      anchored_worst, kRateSlack);
  return out;
}

Outcome scalar_safeguard_equality() {
  struct Case {
    std::string problem;
    double kappa;
    double lambda0;
    double beta_bar;
  };
  const std::vector<Case> cases = {{"skew2d", 0.8, 1.0, 0.001},     {"skew2d", -0.95, 1.0, 0.001},
                                   {"skew2d", 0.6, 0.7, 0.001},      {"linear-quad", 0.9, 1.0, 2.5},
                                   {"linear-quad", -0.5, 1.3, 2.5}};
  double worst = 0.0;
  Index checked = 0;
  for (const auto& c : cases) {
    const auto p = bench::preset(c.problem);
    auto cfg = make_parallel(VariantKind::parallel_x_form, c.kappa, c.lambda0, growth_constant(),
                             0.1, c.beta_bar);
    cfg.eps0 = 1.0 - c.kappa * c.kappa;
    const Schedule s = schedule_for(cfg);
    ParallelDeviationPolicy policy(cfg);
    SolverState st = init(p, s, Vector::Constant(p.dim(), 3.0));
    for (int n = 0; n < 300; ++n) {
      const StepRecord r = step(st, p, s, policy);
      if (!(r.budget > 1e-200)) break;
      worst = std::max(worst, std::abs(r.safeguard_lhs - r.budget) / r.budget);
      ++checked;
    }
  }
  Outcome out;
  out.passed = checked > 0 && worst <= kSafeguardRelTol;
  out.detail = format("%.0f steps, max |lhs - budget|/budget = %.3g", static_cast<double>(checked), worst);
  return out;
}

Outcome fb_reduction() {
  double worst = 0.0;
  for (const char* name : {"skew2d", "box-quad", "linear-quad"}) {
    const auto p = bench::preset(name);
    Schedule s;
    s.gamma0 = 0.1;
    s.beta_bar = std::max(0.001, p.beta());
    Vector x = Vector::Constant(p.dim(), 3.0);
    SolverState st = init(p, s, x);
    ZeroPolicy zero;
    // Textbook iteration x <- (M + gamma A)^{-1} (M x - gamma C x).
    for (int n = 0; n < 1000; ++n) {
      step(st, p, s, zero);
      Vector rhs = p.metric.apply(x) - 0.1 * p.c->eval(x);
      x = p.a->resolvent(p.metric, 0.1, rhs);
      worst = std::max(worst, (st.x - x).norm());
    }
  }
  Outcome out;
  out.passed = worst <= kFbGapTol;
  out.detail = format("3 presets x 1000 steps, max per-step gap = %.3g", worst);
  return out;
}

Outcome appendix_identities() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> pick_n(0, 5000);
  std::uniform_int_distribution<int> pick_steps(1, 20);
  int failures = 0;
  double worst_forms = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const Schedule s = random_schedule(rng, 1.0);
    const ValidationReport r = check_param_identities(s, pick_n(rng));
    if (!r.ok()) ++failures;

    FuzzCase fc = random_case(10000 + static_cast<std::uint64_t>(draw));
    SolverState st = init(fc.problem, fc.schedule, fc.x0);
    RandomDirectionPolicy wild(static_cast<std::uint64_t>(draw), 2.0);
    const int k = pick_steps(rng);
    StepRecord rec;
    for (int i = 0; i < k; ++i) rec = step(st, fc.problem, fc.schedule, wild, StepOptions{false});
    const EllArgumentForms f = ell_argument_forms(rec);
    worst_forms = std::max(worst_forms, f.max_pairwise_gap / (1.0 + f.w1.norm()));
  }
  Outcome out;
  out.passed = failures == 0 && worst_forms <= kFormsRelTol;
  out.detail = format("1000 draws, %.0f identity failures, max forms gap/(1+|w1|) = %.3g", failures,
                      worst_forms);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  CorpusStats corpus;
  bool corpus_ready = false;
  auto with_corpus = [&](Outcome (*f)(const CorpusStats&)) {
    return [&, f] {
      if (!corpus_ready) {
        corpus = fuzz_corpus();
        corpus_ready = true;
      }
      return f(corpus);
    };
  };

  const std::vector<Criterion> criteria = {
      {"tunable iteration counts",
       [] {
         std::vector<double> es;
         for (int i = 0; i <= 10; ++i) es.push_back(i / 10.0);
         return table_check(es, {3068, 1131, 580, 314, 170, 212, 471, 771, 1961, 10625, 21213167},
                            tunable_count, 30.0);
       }},
      {"constant-kappa iteration counts",
       [] {
         std::vector<double> ks;
         for (int i = -9; i <= 9; ++i) ks.push_back(i / 10.0);
         return table_check(ks,
                            {58350, 27653, 17414, 12292, 9219, 7170, 5706, 4607, 3752, 3068, 2507,
                             2040, 1643, 1302, 1005, 741, 501, 258, 288},
                            constant_kappa_count, 5.0);
       }},
      {"fine kappa iteration counts",
       [] {
         return table_check({0.80, 0.82, 0.84, 0.86, 0.88, 0.90}, {258, 179, 180, 213, 238, 288},
                            constant_kappa_count, 1.0);
       }},
      {"Lyapunov identity on fuzz corpus", with_corpus(lyapunov_identity)},
      {"descent inequality and nonnegativity", with_corpus(descent_inequality)},
      {"variant trace equivalences", variant_equivalences},
      {"residual rate envelopes", rate_envelopes},
      {"scalar safeguard equality case", scalar_safeguard_equality},
      {"forward-backward reduction", fb_reduction},
      {"parameter identities and ell forms", appendix_identities},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::printf("[%s] %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
