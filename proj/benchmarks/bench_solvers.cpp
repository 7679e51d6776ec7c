#include <benchmark/benchmark.h>

#include "devsplit/bench.hpp"
#include "devsplit/diagnostics.hpp"
#include "devsplit/engine.hpp"
#include "devsplit/variants.hpp"

using namespace devsplit;

namespace {

const Vector kY0 = Vector::Constant(2, 3.0);

StoppingRule steps(Index n) {
  StoppingRule s;
  s.max_iter = n;
  return s;
}

RunOptions quiet() {
  RunOptions o;
  o.retain_trace = false;
  return o;
}

}  // namespace

// Closed-form tunable recursion on the skew problem, fixed step count.
static void BM_TunableSkew(benchmark::State& state) {
  const auto p = bench::problem_skew2d();
  const auto cfg = make_tunable(static_cast<double>(state.range(0)) / 10.0);
  const RunOptions opts = quiet();
  for (auto _ : state) {
    const RunRecord r = run_tunable(cfg, p, kY0, steps(10000), opts);
    benchmark::DoNotOptimize(r.final_p.data());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_TunableSkew)->Arg(0)->Arg(4)->Arg(10);

static void BM_ConstantKappaSkew(benchmark::State& state) {
  const auto p = bench::problem_skew2d();
  const auto cfg = make_constant_kappa(0.82);
  const RunOptions opts = quiet();
  for (auto _ : state) {
    const RunRecord r = run_constant_kappa(cfg, p, kY0, steps(10000), opts);
    benchmark::DoNotOptimize(r.final_p.data());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ConstantKappaSkew);

// One full general-engine step, including ell and the safeguard check.
static void BM_EngineStep(benchmark::State& state) {
  const auto p = bench::problem_linear_quad();
  const auto cfg = make_parallel(VariantKind::parallel_x_form, 0.5, 1.0, growth_constant(), 0.1, 2.5);
  const Schedule s = schedule_for(cfg);
  ParallelDeviationPolicy policy(cfg);
  SolverState st = init(p, s, Vector::Constant(3, 3.0));
  for (auto _ : state) {
    // Restart before the iterates underflow into denormals.
    if (st.n >= 2000) st = init(p, s, Vector::Constant(3, 3.0));
    const StepRecord r = step(st, p, s, policy);
    benchmark::DoNotOptimize(r.ell);
  }
}
BENCHMARK(BM_EngineStep);

static void BM_EngineStepWithDiagnostics(benchmark::State& state) {
  const auto p = bench::problem_linear_quad();
  Schedule s;
  s.beta_bar = 2.5;
  ZeroPolicy zero;
  const Vector x0 = Vector::Constant(3, 3.0);
  SolverState st = init(p, s, x0);
  auto tracker = std::make_unique<LyapunovTracker>(p, s, x0, p.solution);
  for (auto _ : state) {
    if (st.n >= 2000) {
      st = init(p, s, x0);
      tracker = std::make_unique<LyapunovTracker>(p, s, x0, p.solution);
    }
    const LyapunovRecord r = tracker->observe(step(st, p, s, zero));
    benchmark::DoNotOptimize(r.delta);
  }
}
BENCHMARK(BM_EngineStepWithDiagnostics);

// Cached-factorization resolvent of a dense linear operator.
static void BM_LinearResolvent(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Matrix k = Matrix::Random(d, d);
  Matrix g = k - k.transpose();
  g += Matrix::Identity(d, d);
  const auto a = make_linear_monotone(g);
  const Metric m = Metric::identity(d);
  const Vector r = Vector::Ones(d);
  for (auto _ : state) {
    Vector p = a->resolvent(m, 0.1, r);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_LinearResolvent)->Arg(2)->Arg(8)->Arg(32);

static void BM_ForwardBackwardMap(benchmark::State& state) {
  const auto p = bench::problem_linear_quad();
  const ForwardBackwardMap fb(p, 0.1);
  Vector y = Vector::Constant(3, 3.0);
  Vector out(3);
  for (auto _ : state) {
    fb.apply(y, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ForwardBackwardMap);

BENCHMARK_MAIN();
