#include <cmath>

#include <gtest/gtest.h>

#include "devsplit/bench.hpp"
#include "devsplit/diagnostics.hpp"
#include "devsplit/errors.hpp"
#include "devsplit/variants.hpp"

using namespace devsplit;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

const Vector kY0 = Vector::Constant(2, 3.0);

StoppingRule to_tol(double tol = 1e-6) {
  StoppingRule s;
  s.dist_tol = tol;
  return s;
}

StoppingRule fixed_steps(Index n) {
  StoppingRule s;
  s.max_iter = n;
  return s;
}

double max_trace_gap(const RunRecord& a, const RunRecord& b) {
  EXPECT_EQ(a.trace.size(), b.trace.size());
  double gap = 0.0;
  for (std::size_t i = 0; i < std::min(a.trace.size(), b.trace.size()); ++i) {
    gap = std::max(gap, (a.trace[i].y - b.trace[i].y).norm());
    gap = std::max(gap, (a.trace[i].p - b.trace[i].p).norm());
  }
  return gap;
}

// Zero A, C x = x with the given beta, identity metric.
ProblemInstance identity_c_problem(double beta) {
  return {make_zero_monotone(2), make_quad_grad(Matrix::Identity(2, 2), Vector::Zero(2), beta),
          Metric::identity(2), Vector::Zero(2)};
}

}  // namespace

TEST(Variants, KindNamesRoundTrip) {
  for (auto k : {VariantKind::parallel_x_form, VariantKind::parallel_y_form,
                 VariantKind::constant_kappa, VariantKind::tunable_e, VariantKind::accelerated_fb,
                 VariantKind::halpern}) {
    EXPECT_EQ(parse_variant_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_variant_kind("nope"), UsageError);
}

TEST(Variants, PublishedIterationCounts) {
  const auto p = bench::problem_skew2d();
  EXPECT_EQ(run_tunable(make_tunable(0.0), p, kY0, to_tol()).iterations, 3068);
  EXPECT_EQ(run_tunable(make_tunable(0.4), p, kY0, to_tol()).iterations, 170);
  EXPECT_EQ(run_constant_kappa(make_constant_kappa(0.82), p, kY0, to_tol()).iterations, 179);
  EXPECT_EQ(run_constant_kappa(make_constant_kappa(-0.9), p, kY0, to_tol()).iterations, 58350);
  EXPECT_EQ(run_parallel_x_form(make_parallel(VariantKind::parallel_x_form, 0.8), p, kY0, to_tol())
                .iterations,
            258);
}

TEST(Variants, ZeroKappaIsPlainForwardBackward) {
  const auto p = bench::problem_skew2d();
  const RunRecord rec = run_constant_kappa(make_constant_kappa(0.0), p, kY0, fixed_steps(50));
  Vector x = kY0;
  for (const auto& row : rec.trace) {
    x = forward_backward(p, 0.1, x);
    EXPECT_LE((row.p - x).norm(), 1e-13);
  }
  const RunRecord xf =
      run_parallel_x_form(make_parallel(VariantKind::parallel_x_form, 0.0), p, kY0, fixed_steps(50));
  EXPECT_LE(max_trace_gap(rec, xf), 1e-12);
}

TEST(Variants, XFormFirstStep) {
  const auto p = bench::problem_skew2d();
  ParallelXFormStepper st(make_parallel(VariantKind::parallel_x_form, 0.5), p, kY0);
  const auto it = st.step();
  EXPECT_EQ(it.y, kY0);
  EXPECT_NEAR(it.p(0), 3.3 / 1.01, 1e-14);
  EXPECT_NEAR(it.p(1), 2.7 / 1.01, 1e-14);
}

TEST(Variants, XFormMatchesYFormConstantLambda) {
  const auto p = bench::problem_skew2d();
  for (double k : {0.0, 0.5, -0.7, 0.9}) {
    const auto xf = run_parallel_x_form(make_parallel(VariantKind::parallel_x_form, k), p, kY0,
                                        fixed_steps(500));
    const auto yf = run_parallel_y_form(make_parallel(VariantKind::parallel_y_form, k), p, kY0,
                                        fixed_steps(500));
    EXPECT_LE(max_trace_gap(xf, yf), 1e-10) << "kappa=" << k;
  }
}

TEST(Variants, XFormMatchesYFormGrowingLambda) {
  const auto p = bench::problem_linear_quad();
  auto cfg = make_parallel(VariantKind::parallel_x_form, 0.5, 0.8, growth_power(0.5), 0.1, 2.5);
  const Vector x0 = Vector::Constant(3, 1.5);
  const auto xf = run_parallel_x_form(cfg, p, x0, fixed_steps(300));
  cfg.kind = VariantKind::parallel_y_form;
  const auto yf = run_parallel_y_form(cfg, p, x0, fixed_steps(300));
  EXPECT_LE(max_trace_gap(xf, yf), 1e-10);
}

TEST(Variants, ConstantKappaMatchesParallelConstantLambda) {
  const auto p = bench::problem_skew2d();
  for (double k : {0.3, 0.82, -0.5}) {
    const auto ck = run_constant_kappa(make_constant_kappa(k), p, kY0, fixed_steps(300));
    const auto xf = run_parallel_x_form(make_parallel(VariantKind::parallel_x_form, k), p, kY0,
                                        fixed_steps(300));
    EXPECT_LE(max_trace_gap(ck, xf), 1e-10) << "kappa=" << k;
  }
}

TEST(Variants, TunableOneMatchesAcceleratedFb) {
  const auto p = bench::problem_skew2d();
  const auto t = run_tunable(make_tunable(1.0), p, kY0, fixed_steps(2000));
  const auto a = run_accelerated_fb(make_accelerated_fb(), p, kY0, fixed_steps(2000));
  EXPECT_LE(max_trace_gap(t, a), 1e-10);
}

TEST(Variants, TunableMatchesParallelXForm) {
  const auto p = bench::problem_skew2d();
  for (double e : {0.25, 0.6}) {
    const auto cfg = make_tunable(e);
    const auto t = run_tunable(cfg, p, kY0, fixed_steps(400));
    auto par = make_parallel(VariantKind::parallel_x_form, 0.0, cfg.lambda0, growth_power(e));
    const Schedule s = schedule_for(cfg);
    par.kappa_rule = [s](Index n) { return s.kappa(n); };
    const auto xf = run_parallel_x_form(par, p, kY0, fixed_steps(400));
    EXPECT_LE(max_trace_gap(t, xf), 1e-10) << "e=" << e;
  }
}

TEST(Variants, AcceleratedFirstStep) {
  const auto p = bench::problem_skew2d();
  const auto rec = run_accelerated_fb(make_accelerated_fb(), p, kY0, fixed_steps(2));
  const double c = 1e-4;
  const Vector y1 = (c / 4.0) * kY0 + ((4.0 - c) / 4.0) * rec.trace[0].p;
  EXPECT_LE((rec.trace[1].y - y1).norm(), 1e-14);
}

TEST(Variants, HalpernFixedPointAndReflection) {
  // N = identity: C = 0 with a declared beta.
  ProblemInstance still{make_zero_monotone(2), make_zero_cocoercive(2, 1.0), Metric::identity(2),
                        Vector::Zero(2)};
  const auto rec = run_halpern(make_halpern(1.0), still, kY0, fixed_steps(20));
  for (const auto& row : rec.trace) EXPECT_LE((row.y - kY0).norm(), 1e-14);

  // N = -identity: C x = x, beta = 1, gamma = 2.
  const auto refl = run_halpern(make_halpern(1.0), identity_c_problem(1.0), kY0, fixed_steps(3));
  EXPECT_EQ(refl.trace[0].p, -kY0);
  EXPECT_LE(refl.trace[1].y.norm(), 1e-15);
}

TEST(Variants, HalpernMatchesAcceleratedUnderReduction) {
  const auto p = bench::preset("zero-quad");
  const double beta = p.beta();
  auto acc = make_accelerated_fb(2.0 / beta, beta);
  const auto a = run_accelerated_fb(acc, p, kY0, fixed_steps(1000));
  const auto h = run_halpern(make_halpern(beta), p, kY0, fixed_steps(1000));
  EXPECT_LE(max_trace_gap(a, h), 1e-10);
  const auto t = run_tunable(make_tunable(1.0, 2.0 / beta, beta), p, kY0, fixed_steps(1000));
  EXPECT_LE(max_trace_gap(t, h), 1e-10);
}

TEST(Variants, HalpernRateBound) {
  const auto p = bench::preset("zero-quad");
  const auto h = run_halpern(make_halpern(p.beta()), p, kY0, fixed_steps(3000));
  for (const auto& row : h.trace) {
    EXPECT_GE(halpern_rate_slack(row.n, row.p, row.y, kY0, *p.solution, p.metric), -1e-9);
  }
}

TEST(Variants, ConfigurationErrors) {
  const auto p = bench::problem_skew2d();
  EXPECT_THROW(run_constant_kappa(make_constant_kappa(1.0), p, kY0, to_tol()), ConfigError);
  EXPECT_THROW(run_tunable(make_tunable(1.5), p, kY0, to_tol()), ConfigError);
  EXPECT_THROW(run_tunable(make_tunable(-0.1), p, kY0, to_tol()), ConfigError);
  auto bad_l0 = make_tunable(0.5);
  bad_l0.lambda0 = 1.0;
  EXPECT_THROW(run_tunable(bad_l0, p, kY0, to_tol()), ConfigError);
  EXPECT_THROW(run_halpern(make_halpern(1.0), p, kY0, to_tol()), ConfigError);
  auto wrong = make_halpern(1.0);
  wrong.gamma = 1.0;
  EXPECT_THROW(run_halpern(wrong, identity_c_problem(1.0), kY0, to_tol()), ConfigError);
  EXPECT_THROW(make_halpern(0.0), ConfigError);
  try {
    run_constant_kappa(make_constant_kappa(1.2), p, kY0, to_tol());
  } catch (const ConfigError& e) {
    ASSERT_FALSE(e.items().empty());
    EXPECT_NE(e.items().front().find("kappa"), std::string::npos);
  }
}

TEST(Variants, ScalarSafeguardNeedsLambdaRatio) {
  // kappa^2 <= zeta alone is not enough when lambda grows: at n = 0 the
  // vector condition needs kappa^2 (lambda_1/lambda_0)^2 <= zeta_1.
  const auto p = bench::problem_skew2d();
  const auto cfg =
      make_parallel(VariantKind::parallel_x_form, 0.99, 0.5, growth_power(0.5), 0.1, 0.001);
  const Schedule s = schedule_for(cfg);
  EXPECT_LE(0.99 * 0.99, s.zeta(1));
  EXPECT_NEAR(scalar_safeguard_excess(cfg, s, 0), 0.99 * 0.99 * 2.0 - 1.0, 1e-12);

  ParallelDeviationPolicy policy(cfg);
  SolverState st = init(p, s, kY0);
  EXPECT_THROW(step(st, p, s, policy), SafeguardViolation);
  EXPECT_THROW(run_parallel_x_form(cfg, p, kY0, fixed_steps(5)), SafeguardViolation);
}

TEST(Variants, VectorSafeguardEqualityAtKappaSquaredEqualZeta) {
  const auto p = bench::problem_skew2d();
  auto cfg = make_parallel(VariantKind::parallel_x_form, 0.0);
  cfg.eps0 = 0.36;
  cfg.kappa = 0.8;  // kappa^2 = 1 - eps0
  const Schedule s = schedule_for(cfg);
  ParallelDeviationPolicy policy(cfg);
  SolverState st = init(p, s, kY0);
  for (int n = 0; n < 200; ++n) {
    const StepRecord r = step(st, p, s, policy);
    if (r.budget < 1e-250) break;
    EXPECT_LE(std::abs(r.safeguard_lhs - r.budget) / r.budget, 1e-10) << "n=" << n;
  }
}

TEST(Variants, EmbeddingReproducesVariantTrace) {
  const auto p = bench::problem_skew2d();
  const auto cfg = make_parallel(VariantKind::parallel_x_form, 0.5);
  const Schedule s = schedule_for(cfg);
  ParallelXFormStepper stepper(cfg, p, kY0);
  ParallelDeviationPolicy policy(cfg);
  for (int n = 0; n < 50; ++n) {
    const EmbeddedState em = embed_to_general(cfg, stepper.state());
    EXPECT_LE(em.yz_gap, 1e-10);
    SolverState st = em.state;
    const StepRecord r = step(st, p, s, policy);
    const auto it = stepper.step();
    EXPECT_LE((r.y - it.y).norm(), 1e-10);
    EXPECT_LE((r.p - it.p).norm(), 1e-10);
    EXPECT_LE((st.u - stepper.state().u).norm(), 1e-10);
    EXPECT_LE((st.x - stepper.state().x).norm(), 1e-10);
  }
}

TEST(Variants, EmbeddingOfZeroDeviation) {
  const auto cfg = make_parallel(VariantKind::parallel_x_form, 0.5, 0.7);
  VariantState vs;
  vs.n = 3;
  vs.x = vec({1, 2});
  vs.u = Vector::Zero(2);
  vs.prev_y = vec({0.5, 1});
  vs.prev_p = vec({0.4, 1.1});
  const EmbeddedState em = embed_to_general(cfg, vs);
  EXPECT_EQ(em.v, Vector::Zero(2));
  EXPECT_LE(em.yz_gap, 1e-15);
}

TEST(Variants, EmbeddingCoefficientIdentity) {
  for (double l0 : {0.3, 0.7, 1.0, 1.4}) {
    for (double c : {1e-4, 0.1, 0.5, 1.1}) {
      if (c >= 4 - 2 * l0) continue;
      const double lhs = (1 - l0) * c / (2 - l0 * c) + (2 - c) / (2 - l0 * c);
      EXPECT_NEAR(lhs, 1.0, 1e-15);
    }
  }
}

TEST(Variants, EngineWithParallelPolicyMatchesVariants) {
  const auto p = bench::problem_skew2d();
  for (double e : {0.0, 0.4, 1.0}) {
    const auto cfg = make_tunable(e);
    ParallelDeviationPolicy policy(cfg);
    const auto gen = run(p, schedule_for(cfg), policy, kY0, fixed_steps(300));
    const auto t = run_tunable(cfg, p, kY0, fixed_steps(300));
    EXPECT_LE(max_trace_gap(gen, t), 1e-10) << "e=" << e;
  }
  const auto cfg = make_tunable(0.4);
  ParallelDeviationPolicy policy(cfg);
  EXPECT_EQ(run(p, schedule_for(cfg), policy, kY0, to_tol()).iterations, 170);
}

TEST(Variants, TunableResidualIdentities) {
  const auto p = bench::problem_skew2d();
  for (double e : {0.3, 0.8}) {
    const auto cfg = make_tunable(e);
    const Schedule s = schedule_for(cfg);
    ParallelDeviationPolicy policy(cfg);
    SolverState st = init(p, s, kY0);
    const double c = cfg.gamma_beta_bar();
    const double l0 = cfg.lambda0;
    for (int n = 0; n < 300; ++n) {
      const StepRecord r = step(st, p, s, policy);
      const Vector fp = r.p - r.y;
      EXPECT_LE((ell_norm_argument(r) - fp).norm(), 1e-10);
      const double l1 = s.lambda(n + 1);
      const Vector u_closed = ((l1 - l0) / l1) * ((4 - c - 2 * l0) / 2) * fp;
      EXPECT_LE((r.u_next - u_closed).norm(), 1e-12 * (1 + fp.norm()));
    }
  }
}

TEST(Variants, TunableRateEnvelopeOnSkewProblem) {
  const auto p = bench::problem_skew2d();
  for (double e : {0.25, 0.5, 0.75}) {
    const auto cfg = make_tunable(e);
    const auto rec = run_tunable(cfg, p, kY0, fixed_steps(5000));
    for (const auto& row : rec.trace) {
      ASSERT_GE(tunable_rate_slack(cfg, row.n, row.p, row.y, kY0, *p.solution, p.metric), -1e-9)
          << "e=" << e << " n=" << row.n;
    }
  }
}

TEST(Variants, AnchoredRateThroughEngineOnSkewProblem) {
  // gamma beta_bar = 2 with e = 1 is the anchored setting of the tunable family.
  const auto p = bench::problem_skew2d();
  const auto cfg = make_tunable(1.0, 2.0, 1.0);
  ParallelDeviationPolicy policy(cfg);
  RunOptions opts;
  double worst = 1e300;
  opts.step_observer = [&](const StepRecord& r, TraceRow&) {
    worst = std::min(worst, halpern_rate_slack(r.n, r.p, r.y, kY0, *p.solution, p.metric));
  };
  run(p, schedule_for(cfg), policy, kY0, fixed_steps(2000), opts);
  EXPECT_GE(worst, -1e-9);
}
