#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "devsplit/bench.hpp"
#include "devsplit/engine.hpp"
#include "devsplit/errors.hpp"
#include "devsplit/fuzz.hpp"

using namespace devsplit;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Schedule skew_schedule() {
  Schedule s;
  s.gamma0 = 0.1;
  s.beta_bar = 0.001;
  return s;
}

// Textbook ell_n written term by term from the iterates.
double ell_oracle(const StepRecord& r, const Metric& m) {
  const DerivedParams& d = r.params;
  const Vector w = r.p - r.x + d.alpha * (r.x - r.prev_p) +
                   (d.gamma * d.beta_bar * d.lambda * d.lambda / d.theta_hat) * r.u -
                   (2.0 * d.theta_bar / d.theta) * r.v;
  const Vector a = (r.z - r.p) / d.gamma - (r.prev_z - r.prev_p) / d.gamma_prev;
  const Vector b = r.p - r.y - (r.prev_p - r.prev_y);
  return d.theta / 2.0 * w.dot(m.apply(w)) + 2.0 * d.mu * d.gamma * a.dot(m.apply(r.p - r.prev_p)) +
         d.mu * d.gamma * d.beta_bar / 2.0 * b.dot(m.apply(b));
}

}  // namespace

TEST(Engine, InitState) {
  const auto p = bench::problem_skew2d();
  const SolverState s = init(p, skew_schedule(), vec({3, 3}));
  EXPECT_EQ(s.n, 0);
  EXPECT_EQ(s.prev_p, vec({3, 3}));
  EXPECT_EQ(s.prev_y, vec({3, 3}));
  EXPECT_EQ(s.prev_z, vec({3, 3}));
  EXPECT_EQ(s.u, vec({0, 0}));
  EXPECT_EQ(s.v, vec({0, 0}));
  EXPECT_EQ(s.ell_prev, 0.0);
  EXPECT_EQ(s.gamma_prev, 0.1);
  EXPECT_THROW(init(p, skew_schedule(), vec({3, 3, 3})), UsageError);
}

TEST(Engine, InitRejectsInvalidScheduleWithItems) {
  const auto p = bench::problem_box_quad();  // beta = 2 > beta_bar
  Schedule s = skew_schedule();
  s.eps0 = -1.0;
  try {
    init(p, s, vec({0.5, 0.5}));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.items().size(), 2u);
  }
}

TEST(Engine, OneStepOnSkewProblem) {
  const auto p = bench::problem_skew2d();
  SolverState s = init(p, skew_schedule(), vec({3, 3}));
  ZeroPolicy zero;
  const StepRecord r = step(s, p, skew_schedule(), zero);
  EXPECT_EQ(r.y, vec({3, 3}));
  EXPECT_EQ(r.z, vec({3, 3}));
  EXPECT_NEAR(r.p(0), 3.3 / 1.01, 1e-14);
  EXPECT_NEAR(r.p(1), 2.7 / 1.01, 1e-14);
  EXPECT_LE((s.x - r.p).norm(), 1e-15);
  EXPECT_EQ(s.n, 1);
  // mu = 0, u = v = 0: ell = (theta/2) ||p - x||^2
  EXPECT_NEAR(r.ell, 1.9999 / 2.0 * (r.p - vec({3, 3})).squaredNorm(), 1e-14);
}

TEST(Engine, ZeroDeviationIsForwardBackward) {
  for (const auto& name : bench::preset_names()) {
    const auto p = bench::preset(name);
    Schedule s = skew_schedule();
    s.beta_bar = std::max(0.001, p.beta());
    s.gamma0 = 0.1;
    Vector x = Vector::Constant(p.dim(), 0.7);
    SolverState st = init(p, s, x);
    ZeroPolicy zero;
    for (int n = 0; n < 100; ++n) {
      const StepRecord r = step(st, p, s, zero);
      EXPECT_EQ(r.y, r.x);
      EXPECT_EQ(r.z, r.x);
      const Vector fb = forward_backward(p, 0.1, x);
      ASSERT_LE((st.x - fb).norm(), 1e-12 * std::max(1.0, fb.norm())) << name << " n=" << n;
      x = fb;
    }
  }
}

TEST(Engine, SafeguardLhsExamples) {
  const DerivedParams next = derived_general(1.0, 0.0, 0.1, 0.1, 0.001);
  const Metric id = Metric::identity(2);
  EXPECT_EQ(safeguard_lhs(vec({0, 0}), vec({0, 0}), next, id), 0.0);
  const double one = safeguard_lhs(vec({1, 0}), vec({0, 0}), next, id);
  EXPECT_NEAR(one, 1e-4 / (2.0 - 1e-4), 1e-18);
  EXPECT_NEAR(one, 5.00025e-5, 1e-9);
  EXPECT_DOUBLE_EQ(safeguard_lhs(vec({2, 0}), vec({0, 0}), next, id), 4.0 * one);
  // v-term weight theta_hat/theta = 1 here.
  EXPECT_NEAR(safeguard_lhs(vec({0, 0}), vec({0, 3}), next, id), 9.0, 1e-12);
}

TEST(Engine, EllMatchesTermwiseOracleOnRandomRuns) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    FuzzCase fc = random_case(seed);
    SolverState st = init(fc.problem, fc.schedule, fc.x0);
    ClipPolicy policy(std::make_shared<RandomDirectionPolicy>(seed, 1.0));
    for (int n = 0; n < 60; ++n) {
      const StepRecord r = step(st, fc.problem, fc.schedule, policy);
      const double oracle = ell_oracle(r, fc.problem.metric);
      EXPECT_NEAR(r.ell, oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
      EXPECT_GE(r.ell, -1e-12 * std::max(1.0, r.x.squaredNorm()));
      EXPECT_LE(r.safeguard_lhs, r.budget + 1e-12 * std::max(1.0, r.budget));
    }
  }
}

TEST(Engine, EllAtStepZeroThirdTerm) {
  // With y_{-1} = p_{-1}, the third ell term is (mu gamma beta_bar/2)||p_0 - y_0||^2.
  FuzzCase fc = random_case(3);
  fc.schedule.growth = growth_linear();
  fc.schedule.lambda0 = 0.5;
  SolverState st = init(fc.problem, fc.schedule, fc.x0);
  ZeroPolicy zero;
  const StepRecord r = step(st, fc.problem, fc.schedule, zero);
  const Vector b = r.p - r.y - (r.prev_p - r.prev_y);
  EXPECT_LE((b - (r.p - r.y)).norm(), 1e-15);
}

TEST(Engine, ViolatingPolicyThrows) {
  const auto p = bench::problem_skew2d();
  SolverState st = init(p, skew_schedule(), vec({3, 3}));
  FunctionPolicy doubled([](const StepRecord& r, double budget, const DerivedParams& next,
                            const Metric& m) {
    Vector u = Vector::Ones(r.x.size());
    const double lhs = safeguard_lhs(u, Vector::Zero(r.x.size()), next, m);
    u *= std::sqrt(2.0 * budget / lhs);
    return Deviation{u, Vector::Zero(r.x.size())};
  });
  try {
    step(st, p, skew_schedule(), doubled);
    FAIL() << "expected SafeguardViolation";
  } catch (const SafeguardViolation& e) {
    EXPECT_NEAR(e.lhs(), 2.0 * e.budget(), 1e-12 * e.budget());
    EXPECT_GT(e.budget(), 0.0);
  }
  EXPECT_EQ(st.n, 0);

  SolverState st2 = init(p, skew_schedule(), vec({3, 3}));
  EXPECT_NO_THROW(step(st2, p, skew_schedule(), doubled, StepOptions{false}));
}

TEST(Engine, ClipPolicyMeetsBudgetWithEquality) {
  const auto p = bench::problem_skew2d();
  SolverState st = init(p, skew_schedule(), vec({3, 3}));
  ClipPolicy clip(std::make_shared<RandomDirectionPolicy>(9, 5.0));
  int clipped = 0;
  for (int n = 0; n < 100; ++n) {
    const StepRecord r = step(st, p, skew_schedule(), clip);
    if (std::abs(r.safeguard_lhs - r.budget) <= 1e-12 * std::max(1.0, r.budget)) ++clipped;
    EXPECT_LE(r.safeguard_lhs, r.budget * (1 + 1e-12) + 1e-300);
  }
  EXPECT_GT(clipped, 50);
}

TEST(Engine, RunSkewProblemToleranceCount) {
  const auto p = bench::problem_skew2d();
  ZeroPolicy zero;
  StoppingRule stop;
  stop.dist_tol = 1e-6;
  RunOptions opts;
  opts.retain_trace = false;
  const RunRecord rec = run(p, skew_schedule(), zero, vec({3, 3}), stop, opts);
  EXPECT_TRUE(rec.converged);
  EXPECT_EQ(rec.iterations, 3068);
  EXPECT_TRUE(rec.trace.empty());
  EXPECT_LE(rec.final_dist, 1e-6);
  EXPECT_EQ(rec.final_p.size(), 2);
}

TEST(Engine, RunWithZeroMaxIter) {
  const auto p = bench::problem_skew2d();
  ZeroPolicy zero;
  StoppingRule stop;
  stop.max_iter = 0;
  stop.dist_tol = 1e-6;
  const RunRecord rec = run(p, skew_schedule(), zero, vec({3, 3}), stop);
  EXPECT_FALSE(rec.converged);
  EXPECT_EQ(rec.iterations, 0);
  EXPECT_TRUE(rec.trace.empty());
}

TEST(Engine, RunNotConvergedKeepsPartialTrace) {
  const auto p = bench::problem_skew2d();
  ZeroPolicy zero;
  StoppingRule stop;
  stop.max_iter = 25;
  stop.dist_tol = 1e-6;
  RunOptions opts;
  opts.trace_stride = 10;
  const RunRecord rec = run(p, skew_schedule(), zero, vec({3, 3}), stop, opts);
  EXPECT_FALSE(rec.converged);
  EXPECT_EQ(rec.iterations, 25);
  ASSERT_EQ(rec.trace.size(), 4u);
  EXPECT_EQ(rec.trace[0].n, 0);
  EXPECT_EQ(rec.trace[2].n, 20);
  EXPECT_EQ(rec.trace.back().n, 24);
}

TEST(Engine, DistanceToleranceNeedsSolution) {
  auto p = bench::problem_skew2d();
  p.solution.reset();
  ZeroPolicy zero;
  StoppingRule stop;
  stop.dist_tol = 1e-6;
  EXPECT_THROW(run(p, skew_schedule(), zero, vec({3, 3}), stop), ConfigError);
  StoppingRule fp;
  fp.fp_tol = 1e-6;
  const RunRecord rec = run(p, skew_schedule(), zero, vec({3, 3}), fp);
  EXPECT_TRUE(rec.converged);
  EXPECT_TRUE(std::isnan(rec.final_dist));
  EXPECT_LE(rec.final_fp_res, 1e-6);
}

TEST(Engine, SinkAndRetainLimit) {
  const auto p = bench::problem_skew2d();
  ZeroPolicy zero;
  StoppingRule stop;
  stop.max_iter = 1000;
  stop.dist_tol = 1e-30;
  int sunk = 0;
  RunOptions opts;
  opts.sink = [&](const TraceRow&) { ++sunk; };
  opts.retain_limit = 64;
  const RunRecord rec = run(p, skew_schedule(), zero, vec({3, 3}), stop, opts);
  EXPECT_LE(rec.trace.size(), 64u + 1);
  EXPECT_EQ(rec.trace.front().n, 0);
  EXPECT_EQ(rec.trace.back().n, 999);
  for (std::size_t i = 1; i < rec.trace.size(); ++i) EXPECT_LT(rec.trace[i - 1].n, rec.trace[i].n);
  EXPECT_GE(sunk, static_cast<int>(rec.trace.size()));
}

TEST(Engine, MetricDistanceNorm) {
  auto p = bench::problem_skew2d();
  ZeroPolicy zero;
  StoppingRule stop;
  stop.max_iter = 3;
  stop.dist_tol = 1e-6;
  stop.dist_norm = DistNorm::metric;
  const RunRecord rec = run(p, skew_schedule(), zero, vec({3, 3}), stop);
  EXPECT_NEAR(rec.trace[0].dist, rec.trace[0].p.norm(), 1e-15);
}
