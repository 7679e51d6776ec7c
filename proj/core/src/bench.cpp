#include "devsplit/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <memory>
#include <thread>

#include "devsplit/diagnostics.hpp"
#include "devsplit/errors.hpp"

namespace devsplit::bench {

ProblemInstance problem_skew2d() {
  Matrix g(2, 2);
  g << 0.0, -1.0, 1.0, 0.0;
  ProblemInstance p{make_linear_monotone(g), make_zero_cocoercive(2), Metric::identity(2),
                    Vector::Zero(2)};
  return p;
}

ProblemInstance problem_box_quad() {
  Matrix q(2, 2);
  q << 2.0, 0.0, 0.0, 1.0;
  Vector offset(2);
  offset << -3.0, 0.5;
  Vector sol(2);
  sol << 1.0, 0.0;
  ProblemInstance p{make_box(Vector::Zero(2), Vector::Ones(2)), make_quad_grad(q, offset, 2.0),
                    Metric::identity(2), sol};
  return p;
}

ProblemInstance problem_linear_quad() {
  Matrix g(3, 3);
  g << 0.5, -1.0, 0.2,
       1.0, 0.0, -0.5,
      -0.2, 0.5, 0.1;
  Matrix q(3, 3);
  q << 2.0, 0.5, 0.0,
       0.5, 1.0, 0.0,
       0.0, 0.0, 0.0;
  Vector sol(3);
  sol << 1.0, -1.0, 0.5;
  const Vector offset = -(g + q) * sol;
  const Metric m = Metric::identity(3);
  ProblemInstance p{make_linear_monotone(g), make_quad_grad(q, offset, cocoercivity_constant(q, m)),
                    m, sol};
  return p;
}

namespace {

// A = 0, C x = Q x + q: the setting of the anchored (Halpern) iteration.
ProblemInstance problem_zero_quad() {
  Matrix q(2, 2);
  q << 2.0, 1.0, 1.0, 1.0;
  Vector sol(2);
  sol << 1.0, -2.0;
  const Vector offset = -q * sol;
  const Metric m = Metric::identity(2);
  ProblemInstance p{make_zero_monotone(2), make_quad_grad(q, offset, cocoercivity_constant(q, m)),
                    m, sol};
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"skew2d", "box-quad", "linear-quad", "zero-quad"};
}

ProblemInstance preset(const std::string& name) {
  if (name == "skew2d") return problem_skew2d();
  if (name == "box-quad") return problem_box_quad();
  if (name == "linear-quad") return problem_linear_quad();
  if (name == "zero-quad") return problem_zero_quad();
  throw ConfigError("unknown problem preset '" + name + "'");
}

std::string to_string(Algo algo) {
  switch (algo) {
    case Algo::fb: return "fb";
    case Algo::general: return "general";
    case Algo::parallel: return "parallel";
    case Algo::constant_kappa: return "constant-kappa";
    case Algo::tunable: return "tunable";
    case Algo::accel_fb: return "accel-fb";
    case Algo::halpern: return "halpern";
  }
  return "unknown";
}

Algo parse_algo(const std::string& name) {
  for (auto a : {Algo::fb, Algo::general, Algo::parallel, Algo::constant_kappa, Algo::tunable,
                 Algo::accel_fb, Algo::halpern}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown algorithm '" + name + "'");
}

const ProblemInstance& problem_of(RunConfig& cfg) {
  if (!cfg.problem) cfg.problem = preset(cfg.problem_name);
  return *cfg.problem;
}

Schedule general_schedule(const RunConfig& cfg) {
  Schedule s;
  s.lambda0 = cfg.lambda0.value_or(1.0);
  s.growth = cfg.algo == Algo::fb ? growth_constant() : cfg.growth;
  s.gamma0 = cfg.gamma;
  s.beta_bar = cfg.beta_bar;
  s.eps = cfg.eps;
  s.eps0 = cfg.eps0;
  s.eps1 = cfg.eps1;
  const double k = cfg.kappa;
  s.kappa_rule = [k](Index) { return k; };
  return s;
}

VariantConfig variant_config(const RunConfig& cfg) {
  VariantConfig v;
  switch (cfg.algo) {
    case Algo::parallel:
    case Algo::general:
      v = make_parallel(cfg.y_form ? VariantKind::parallel_y_form : VariantKind::parallel_x_form,
                        cfg.kappa, cfg.lambda0.value_or(1.0), cfg.growth, cfg.gamma,
                        cfg.beta_bar);
      break;
    case Algo::constant_kappa:
      v = make_constant_kappa(cfg.kappa, cfg.gamma, cfg.beta_bar);
      if (cfg.lambda0) v.lambda0 = *cfg.lambda0;
      break;
    case Algo::tunable:
      v = make_tunable(cfg.e, cfg.gamma, cfg.beta_bar);
      if (cfg.lambda0) v.lambda0 = *cfg.lambda0;
      break;
    case Algo::accel_fb:
      v = make_accelerated_fb(cfg.gamma, cfg.beta_bar);
      break;
    case Algo::halpern: {
      RunConfig copy = cfg;
      v = make_halpern(problem_of(copy).beta());
      break;
    }
    case Algo::fb:
      throw ConfigError("fb runs use the general engine, not a variant");
  }
  v.eps = cfg.eps;
  v.eps0 = cfg.eps0;
  return v;
}

void validate(RunConfig& cfg) {
  const ProblemInstance& problem = problem_of(cfg);
  std::vector<std::string> items;
  if (!(cfg.tol > 0.0)) items.push_back("tol must be positive");
  if (cfg.max_iter < 0) items.push_back("max_iter must be nonnegative");
  if (cfg.trace_stride < 1) items.push_back("trace_stride must be at least 1");
  if (cfg.x0.size() != problem.dim()) {
    items.push_back("x0 has dimension " + std::to_string(cfg.x0.size()) + ", problem has " +
                    std::to_string(problem.dim()));
  }
  if (cfg.tol_kind == TolKind::dist && !problem.solution) {
    items.push_back("tol_kind dist requires a problem with a known solution");
  }
  if (!items.empty()) throw ConfigError("invalid run configuration", items);
}

RunOutcome execute(RunConfig cfg, const TraceSink& sink) {
  validate(cfg);
  const ProblemInstance& problem = problem_of(cfg);
  StoppingRule stop;
  stop.max_iter = cfg.max_iter;
  stop.dist_norm = cfg.dist_norm;
  if (cfg.tol_kind == TolKind::dist) {
    stop.dist_tol = cfg.tol;
  } else {
    stop.fp_tol = cfg.tol;
  }
  RunOptions options;
  options.trace_stride = cfg.trace_stride;
  options.retain_trace = cfg.retain_trace;
  options.retain_limit = cfg.retain_limit;
  options.sink = sink;

  RunOutcome out;
  if (cfg.algo == Algo::fb || cfg.algo == Algo::general) {
    const Schedule schedule = general_schedule(cfg);
    std::shared_ptr<DeviationPolicy> policy;
    if (cfg.algo == Algo::fb || cfg.policy == PolicyKind::zero) {
      policy = std::make_shared<ZeroPolicy>();
    } else if (cfg.policy == PolicyKind::parallel) {
      policy = std::make_shared<ParallelDeviationPolicy>(variant_config(cfg));
    } else {
      policy = std::make_shared<ClipPolicy>(std::make_shared<RandomDirectionPolicy>(cfg.seed));
    }
    std::shared_ptr<LyapunovTracker> tracker;
    if (cfg.diagnostics) {
      tracker = std::make_shared<LyapunovTracker>(problem, schedule, cfg.x0, problem.solution);
      options.step_observer = make_trace_observer(tracker);
    }
    out.record = run(problem, schedule, *policy, cfg.x0, stop, options);
    if (tracker && tracker->has_solution()) {
      out.max_rel_delta = tracker->summary().max_rel_delta;
      out.min_descent_slack = tracker->summary().min_descent_slack;
    }
    out.record.algo = to_string(cfg.algo);
    return out;
  }
  out.record = run_variant(variant_config(cfg), problem, cfg.x0, stop, options);
  out.record.algo = to_string(cfg.algo);
  return out;
}

unsigned sweep_threads(unsigned requested, std::size_t jobs) {
  unsigned n = requested;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DEVSPLIT_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(jobs, 1)));
  return std::max(1u, n);
}

SweepResult sweep(const RunConfig& base, const std::string& param,
                  const std::vector<double>& values, unsigned threads) {
  if (param != "e" && param != "kappa") {
    throw ConfigError("sweep parameter must be 'e' or 'kappa', got '" + param + "'");
  }
  RunConfig shared = base;
  problem_of(shared);

  SweepResult result;
  result.param_name = param;
  result.rows.resize(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      RunConfig cfg = shared;
      (param == "e" ? cfg.e : cfg.kappa) = values[i];
      SweepRow& row = result.rows[i];
      row.value = values[i];
      try {
        RunOutcome out = execute(cfg);
        row.iterations = out.record.iterations;
        row.converged = out.record.converged;
        if (cfg.retain_trace) row.trace = std::move(out.record.trace);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const unsigned n = sweep_threads(threads, values.size());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

}  // namespace devsplit::bench
