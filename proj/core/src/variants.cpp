#include "devsplit/variants.hpp"

#include <cmath>
#include <sstream>

#include "devsplit/errors.hpp"

namespace devsplit {

std::string to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::parallel_x_form: return "parallel_x_form";
    case VariantKind::parallel_y_form: return "parallel_y_form";
    case VariantKind::constant_kappa: return "constant_kappa";
    case VariantKind::tunable_e: return "tunable_e";
    case VariantKind::accelerated_fb: return "accelerated_fb";
    case VariantKind::halpern: return "halpern";
  }
  return "unknown";
}

VariantKind parse_variant_kind(const std::string& name) {
  for (auto k : {VariantKind::parallel_x_form, VariantKind::parallel_y_form,
                 VariantKind::constant_kappa, VariantKind::tunable_e,
                 VariantKind::accelerated_fb, VariantKind::halpern}) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown variant kind '" + name + "'");
}

VariantConfig make_parallel(VariantKind form, double kappa, double lambda0, GrowthFunction growth,
                            double gamma, double beta_bar) {
  if (form != VariantKind::parallel_x_form && form != VariantKind::parallel_y_form) {
    throw UsageError("make_parallel needs the x-form or y-form kind");
  }
  VariantConfig cfg;
  cfg.kind = form;
  cfg.kappa = kappa;
  cfg.lambda0 = lambda0;
  cfg.growth = std::move(growth);
  cfg.gamma = gamma;
  cfg.beta_bar = beta_bar;
  return cfg;
}

VariantConfig make_constant_kappa(double kappa, double gamma, double beta_bar) {
  VariantConfig cfg;
  cfg.kind = VariantKind::constant_kappa;
  cfg.kappa = kappa;
  cfg.lambda0 = 1.0;
  cfg.growth = growth_constant();
  cfg.gamma = gamma;
  cfg.beta_bar = beta_bar;
  return cfg;
}

VariantConfig make_tunable(double e, double gamma, double beta_bar) {
  VariantConfig cfg;
  cfg.kind = VariantKind::tunable_e;
  cfg.e = e;
  cfg.gamma = gamma;
  cfg.beta_bar = beta_bar;
  cfg.lambda0 = std::pow(1.0 - gamma * beta_bar / 4.0, e);
  cfg.growth = growth_power(e);
  return cfg;
}

VariantConfig make_accelerated_fb(double gamma, double beta_bar) {
  VariantConfig cfg = make_tunable(1.0, gamma, beta_bar);
  cfg.kind = VariantKind::accelerated_fb;
  return cfg;
}

VariantConfig make_halpern(double beta) {
  if (!(beta > 0.0)) throw ConfigError("Halpern reduction needs beta > 0");
  VariantConfig cfg = make_tunable(1.0, 2.0 / beta, beta);
  cfg.kind = VariantKind::halpern;
  return cfg;
}

namespace {

bool in_parallel_family(VariantKind k) {
  return k == VariantKind::parallel_x_form || k == VariantKind::parallel_y_form ||
         k == VariantKind::constant_kappa || k == VariantKind::tunable_e ||
         k == VariantKind::accelerated_fb || k == VariantKind::halpern;
}

bool uses_exponent(VariantKind k) {
  return k == VariantKind::tunable_e || k == VariantKind::accelerated_fb ||
         k == VariantKind::halpern;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

Schedule schedule_for(const VariantConfig& cfg) {
  Schedule s;
  s.gamma0 = cfg.gamma;
  s.beta_bar = cfg.beta_bar;
  s.eps = cfg.eps;
  s.eps0 = cfg.eps0;
  s.zeta_rule = cfg.zeta_rule;
  s.lambda0 = cfg.lambda0;
  if (uses_exponent(cfg.kind)) {
    s.growth = growth_power(cfg.kind == VariantKind::tunable_e ? cfg.e : 1.0);
    const double l0 = s.lambda0;
    const GrowthFunction f = s.growth;
    s.kappa_rule = [l0, f](Index n) {
      const double next = l0 * f(static_cast<double>(n + 1));
      return (next - l0) / next;
    };
  } else {
    s.growth = cfg.growth;
    if (cfg.kind == VariantKind::constant_kappa) s.growth = growth_constant();
    if (cfg.kappa_rule) {
      s.kappa_rule = cfg.kappa_rule;
    } else {
      const double k = cfg.kappa;
      s.kappa_rule = [k](Index) { return k; };
    }
  }
  return s;
}

double scalar_safeguard_excess(const VariantConfig&, const Schedule& s, Index n) {
  const double k = s.kappa(n);
  const double ratio = s.lambda(n + 1) / s.lambda(n);
  return k * k * ratio * ratio - s.zeta(n + 1);
}

void validate(const VariantConfig& cfg, const ProblemInstance& problem, Index horizon) {
  problem.validate(cfg.gamma > 0.0 ? cfg.gamma : 0.1);
  std::vector<std::string> items;
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) items.push_back("gamma must be positive");
  if (!(cfg.beta_bar >= 0.0)) items.push_back("beta_bar must be nonnegative");
  switch (cfg.kind) {
    case VariantKind::constant_kappa:
      if (!(std::abs(cfg.kappa) < 1.0)) {
        items.push_back("constant kappa must lie in (-1, 1), got " + fmt(cfg.kappa));
      }
      if (cfg.lambda0 != 1.0) items.push_back("constant kappa requires lambda0 = 1");
      break;
    case VariantKind::tunable_e: {
      if (!(cfg.e >= 0.0 && cfg.e <= 1.0)) {
        items.push_back("exponent e must lie in [0, 1], got " + fmt(cfg.e));
      }
      const double expect = std::pow(1.0 - cfg.gamma_beta_bar() / 4.0, cfg.e);
      if (std::abs(cfg.lambda0 - expect) > 1e-14) {
        items.push_back("tunable lambda0 must equal (1 - gamma beta_bar/4)^e = " + fmt(expect));
      }
      break;
    }
    case VariantKind::halpern: {
      if (!problem.a->is_zero()) items.push_back("Halpern reduction requires A = 0");
      const double gb = cfg.gamma * problem.beta();
      if (std::abs(gb - 2.0) > 1e-12) {
        items.push_back("Halpern reduction requires gamma beta = 2, got " + fmt(gb));
      }
      if (cfg.beta_bar != problem.beta()) {
        items.push_back("Halpern reduction requires beta_bar = beta");
      }
      break;
    }
    default:
      break;
  }
  if (!items.empty()) throw ConfigError("invalid " + to_string(cfg.kind) + " configuration", items);

  const Schedule s = schedule_for(cfg);
  ValidationReport report = validate_schedule(s, problem.beta(), horizon);
  if (!report.ok()) {
    throw ConfigError("invalid " + to_string(cfg.kind) + " schedule", report.failures());
  }
  if (in_parallel_family(cfg.kind)) {
    for (Index n = 0; n <= horizon; ++n) {
      const double k = s.kappa(n);
      if (!(k * k <= 1.0 - cfg.eps0)) {
        throw ConfigError("invalid " + to_string(cfg.kind) + " schedule",
                          {"kappa_n^2 <= 1 - eps0 fails at n=" + std::to_string(n) + " (kappa=" +
                           fmt(k) + ")"});
      }
    }
  }
}

namespace {

void check_scalar_safeguard(const VariantConfig& cfg, const Schedule& s, Index n) {
  const double excess = scalar_safeguard_excess(cfg, s, n);
  if (excess > 1e-12) {
    const double z = s.zeta(n + 1);
    throw SafeguardViolation("parallel deviation violates the safeguard at n=" +
                                 std::to_string(n + 1),
                             excess + z, z);
  }
}

void require_x0(const ProblemInstance& problem, const Vector& x0) {
  if (x0.size() != problem.dim()) {
    throw UsageError("initial point has dimension " + std::to_string(x0.size()) +
                     ", problem has " + std::to_string(problem.dim()));
  }
  require_finite(x0, "initial point");
}

}  // namespace

// ---------------------------------------------------------------------------

ParallelXFormStepper::ParallelXFormStepper(const VariantConfig& cfg,
                                           const ProblemInstance& problem, const Vector& x0)
    : cfg_(cfg), problem_(problem), schedule_(schedule_for(cfg)), fb_(problem, cfg.gamma) {
  require_x0(problem, x0);
  state_.n = 0;
  state_.x = x0;
  state_.u = Vector::Zero(x0.size());
  state_.prev_y = x0;
  state_.prev_p = x0;
  state_.ell_prev = 0.0;
}

ParallelXFormStepper::Iterate ParallelXFormStepper::step() {
  const Index n = state_.n;
  const double c = cfg_.gamma_beta_bar();
  const double l0 = schedule_.lambda0;
  const double ln = schedule_.lambda(n);
  const double a = (ln - l0) / ln;
  const double q = (2.0 - c) / (2.0 - l0 * c);
  VariantState& st = state_;

  Iterate it;
  it.n = n;
  it.y = st.x + a * (st.prev_y - st.x) + st.u;
  it.p = fb_(it.y);
  Vector x_next = st.x + ln * (it.p - it.y) + (ln - l0) * (st.prev_y - st.prev_p);
  const Vector w =
      it.p - st.x + a * (st.x - st.prev_p) - ((2.0 - c - 2.0 * l0) / (4.0 - c - 2.0 * l0)) * st.u;

  check_scalar_safeguard(cfg_, schedule_, n);
  Vector u_next = (schedule_.kappa(n) * (4.0 - c - 2.0 * l0) / 2.0) * w;

  StepRecord rec;
  rec.params = params(schedule_, n);
  rec.x = st.x;
  rec.y = it.y;
  rec.z = it.y;
  rec.p = it.p;
  rec.u = st.u;
  rec.v = q * st.u;
  rec.prev_y = st.prev_y;
  rec.prev_z = st.prev_y;
  rec.prev_p = st.prev_p;
  st.ell_prev = compute_ell(rec, problem_.metric);

  st.n = n + 1;
  st.x = std::move(x_next);
  st.u = std::move(u_next);
  st.prev_y = it.y;
  st.prev_p = it.p;
  return it;
}

RunRecord run_parallel_x_form(const VariantConfig& cfg, const ProblemInstance& problem,
                              const Vector& x0, const StoppingRule& stop,
                              const RunOptions& options) {
  validate(cfg, problem);
  ParallelXFormStepper stepper(cfg, problem, x0);
  RunMonitor monitor(problem, stop, options, to_string(VariantKind::parallel_x_form));
  for (Index n = 0; n < stop.max_iter; ++n) {
    const auto it = stepper.step();
    if (monitor.observe(n, it.p, it.y)) break;
  }
  return monitor.finish();
}

RunRecord run_parallel_y_form(const VariantConfig& cfg, const ProblemInstance& problem,
                              const Vector& x0, const StoppingRule& stop,
                              const RunOptions& options) {
  validate(cfg, problem);
  require_x0(problem, x0);
  const Schedule s = schedule_for(cfg);
  const ForwardBackwardMap fb(problem, cfg.gamma);
  const double c = cfg.gamma_beta_bar();
  const double l0 = s.lambda0;
  const double half = (4.0 - c - 2.0 * l0) / 2.0;

  Vector y = x0;
  Vector prev_y = x0;
  Vector prev_p = x0;
  Vector u = Vector::Zero(x0.size());
  Vector p(x0.size());
  Vector u_next(x0.size());
  Vector y_next(x0.size());
  RunMonitor monitor(problem, stop, options, to_string(VariantKind::parallel_y_form));
  for (Index n = 0; n < stop.max_iter; ++n) {
    fb.apply(y, p);
    if (monitor.observe(n, p, y)) break;
    check_scalar_safeguard(cfg, s, n);
    const double ln = s.lambda(n);
    const double ln1 = s.lambda(n + 1);
    const double a = (ln - l0) / ln;
    u_next = s.kappa(n) * (half * (p - y - a * (prev_p - prev_y)) + u);
    y_next = y + (l0 * ln / ln1) * (p - y) + u_next - (ln / ln1) * u +
             ((ln - l0) / ln1) * ((y - prev_y) + l0 * (prev_y - prev_p));
    prev_y.swap(y);
    y.swap(y_next);
    prev_p = p;
    u.swap(u_next);
  }
  return monitor.finish();
}

RunRecord run_constant_kappa(const VariantConfig& cfg, const ProblemInstance& problem,
                             const Vector& p_init, const StoppingRule& stop,
                             const RunOptions& options) {
  validate(cfg, problem);
  require_x0(problem, p_init);
  const ForwardBackwardMap fb(problem, cfg.gamma);
  const double c = cfg.gamma_beta_bar();
  const double k = cfg.kappa;

  Vector prev_p = p_init;
  Vector u = Vector::Zero(p_init.size());
  Vector u_prev = Vector::Zero(p_init.size());
  Vector u_next(p_init.size());
  Vector y(p_init.size());
  Vector p(p_init.size());
  RunMonitor monitor(problem, stop, options, to_string(VariantKind::constant_kappa));
  for (Index n = 0; n < stop.max_iter; ++n) {
    y = prev_p + u - u_prev;
    fb.apply(y, p);
    if (monitor.observe(n, p, y)) break;
    u_next = k * ((2.0 - c) / 2.0 * (p - prev_p + u_prev) + c / 2.0 * u);
    u_prev.swap(u);
    u.swap(u_next);
    prev_p.swap(p);
  }
  return monitor.finish();
}

RunRecord run_tunable(const VariantConfig& cfg, const ProblemInstance& problem, const Vector& y0,
                      const StoppingRule& stop, const RunOptions& options) {
  validate(cfg, problem);
  require_x0(problem, y0);
  const Schedule s = schedule_for(cfg);
  const ForwardBackwardMap fb(problem, cfg.gamma);
  const double c = cfg.gamma_beta_bar();
  const double l0 = s.lambda0;

  Vector y = y0;
  Vector prev_y = y0;
  Vector prev_p = y0;
  Vector p(y0.size());
  Vector y_next(y0.size());
  RunMonitor monitor(problem, stop, options, to_string(cfg.kind));
  double ln = s.lambda(0);
  for (Index n = 0; n < stop.max_iter; ++n) {
    fb.apply(y, p);
    if (monitor.observe(n, p, y)) break;
    const double ln1 = s.lambda(n + 1);
    const double a = l0 * ln / ln1 + (ln1 - l0) / ln1 * (4.0 - c - 2.0 * l0) / 2.0;
    const double b = (ln - l0) / ln1;
    y_next = y + a * (p - y) + b * ((y - prev_y) + (4.0 - c) / 2.0 * (prev_y - prev_p));
    prev_y.swap(y);
    y.swap(y_next);
    prev_p.swap(p);
    ln = ln1;
  }
  return monitor.finish();
}

RunRecord run_accelerated_fb(const VariantConfig& cfg, const ProblemInstance& problem,
                             const Vector& y0, const StoppingRule& stop,
                             const RunOptions& options) {
  validate(cfg, problem);
  require_x0(problem, y0);
  const ForwardBackwardMap fb(problem, cfg.gamma);
  const double c = cfg.gamma_beta_bar();

  Vector y = y0;
  Vector prev_y = y0;
  Vector prev_p = y0;
  Vector p(y0.size());
  Vector y_next(y0.size());
  RunMonitor monitor(problem, stop, options, to_string(VariantKind::accelerated_fb));
  for (Index n = 0; n < stop.max_iter; ++n) {
    fb.apply(y, p);
    if (monitor.observe(n, p, y)) break;
    const double nd = static_cast<double>(n);
    const double den = 4.0 + 2.0 * nd;
    y_next = (c * (1.0 + nd) / den) * y + (nd * (2.0 - c) / den) * prev_y +
             ((1.0 + nd) * (4.0 - c) / den) * p - (nd * (4.0 - c) / den) * prev_p;
    prev_y.swap(y);
    y.swap(y_next);
    prev_p.swap(p);
  }
  return monitor.finish();
}

RunRecord run_halpern(const VariantConfig& cfg, const ProblemInstance& problem, const Vector& y0,
                      const StoppingRule& stop, const RunOptions& options) {
  VariantConfig checked = cfg;
  checked.kind = VariantKind::halpern;
  validate(checked, problem);
  require_x0(problem, y0);
  const double gamma = cfg.gamma;

  Vector y = y0;
  Vector p(y0.size());
  RunMonitor monitor(problem, stop, options, to_string(VariantKind::halpern));
  for (Index n = 0; n < stop.max_iter; ++n) {
    p = y - gamma * problem.metric.apply_inverse(problem.c->eval(y));
    if (monitor.observe(n, p, y)) break;
    const double nd = static_cast<double>(n);
    y = (1.0 / (nd + 2.0)) * y0 + ((nd + 1.0) / (nd + 2.0)) * p;
  }
  return monitor.finish();
}

RunRecord run_variant(const VariantConfig& cfg, const ProblemInstance& problem, const Vector& x0,
                      const StoppingRule& stop, const RunOptions& options) {
  switch (cfg.kind) {
    case VariantKind::parallel_x_form: return run_parallel_x_form(cfg, problem, x0, stop, options);
    case VariantKind::parallel_y_form: return run_parallel_y_form(cfg, problem, x0, stop, options);
    case VariantKind::constant_kappa: return run_constant_kappa(cfg, problem, x0, stop, options);
    case VariantKind::tunable_e: return run_tunable(cfg, problem, x0, stop, options);
    case VariantKind::accelerated_fb: return run_accelerated_fb(cfg, problem, x0, stop, options);
    case VariantKind::halpern: return run_halpern(cfg, problem, x0, stop, options);
  }
  throw UsageError("unknown variant kind");
}

// ---------------------------------------------------------------------------

ParallelDeviationPolicy::ParallelDeviationPolicy(VariantConfig cfg)
    : cfg_(std::move(cfg)), schedule_(schedule_for(cfg_)) {}

Deviation ParallelDeviationPolicy::propose(const StepRecord& record, double, const DerivedParams&,
                                           const Metric&) {
  const double c = record.params.gamma_beta_bar();
  const double l0 = cfg_.lambda0;
  const double k = schedule_.kappa(record.n);
  Deviation d;
  d.u = (k * (4.0 - c - 2.0 * l0) / 2.0) * ell_norm_argument(record);
  d.v = ((2.0 - c) / (2.0 - l0 * c)) * d.u;
  return d;
}

EmbeddedState embed_to_general(const VariantConfig& cfg, const VariantState& vs) {
  const Schedule s = schedule_for(cfg);
  const double c = cfg.gamma_beta_bar();
  const double l0 = s.lambda0;
  EmbeddedState out;
  out.u = vs.u;
  out.v = ((2.0 - c) / (2.0 - l0 * c)) * vs.u;
  SolverState& st = out.state;
  st.n = vs.n;
  st.x = vs.x;
  st.u = out.u;
  st.v = out.v;
  st.prev_y = vs.prev_y;
  st.prev_z = vs.prev_y;
  st.prev_p = vs.prev_p;
  st.gamma_prev = s.gamma(vs.n - 1);
  st.ell_prev = vs.ell_prev;

  const DerivedParams d = params(s, vs.n);
  const Vector y = st.x + d.alpha * (st.prev_y - st.x) + st.u;
  const Vector z = st.x + d.alpha * (st.prev_p - st.x) + d.alpha_bar * (st.prev_z - st.prev_p) +
                   (d.theta_bar * c / d.theta_hat) * st.u + st.v;
  out.yz_gap = (y - z).norm();
  return out;
}

}  // namespace devsplit
