#include "devsplit/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "devsplit/errors.hpp"

namespace devsplit {

GrowthFunction growth_constant() {
  GrowthFunction f;
  f.eval = [](double) { return 1.0; };
  f.derivative_at_zero = 0.0;
  f.label = "constant";
  f.exponent = 0.0;
  return f;
}

GrowthFunction growth_linear() {
  GrowthFunction f;
  f.eval = [](double n) { return 1.0 + n; };
  f.derivative_at_zero = 1.0;
  f.label = "linear";
  f.unbounded = true;
  f.exponent = 1.0;
  return f;
}

GrowthFunction growth_power(double e) {
  if (!std::isfinite(e)) throw UsageError("growth exponent must be finite");
  if (e == 0.0) return growth_constant();
  GrowthFunction f;
  f.eval = [e](double n) { return std::pow(1.0 + n, e); };
  f.derivative_at_zero = e;
  std::ostringstream label;
  label << "power(" << e << ")";
  f.label = label.str();
  f.unbounded = e > 0.0;
  f.exponent = e;
  return f;
}

GrowthFunction growth_log() {
  GrowthFunction f;
  f.eval = [](double n) { return std::log(n + 2.0) / std::log(2.0); };
  f.derivative_at_zero = 1.0 / (2.0 * std::log(2.0));
  f.label = "log";
  f.unbounded = true;
  return f;
}

double Schedule::mu(Index n) const { return mu_of(*this, n); }

double mu_of(const Schedule& s, Index n) {
  const double l = s.lambda(n);
  return l * l / s.lambda0 - l;
}

DerivedParams derived_general(double lambda, double mu, double gamma, double gamma_prev,
                              double beta_bar) {
  if (!(lambda + mu > 0.0)) throw UsageError("derived parameters need lambda + mu > 0");
  DerivedParams d;
  d.lambda = lambda;
  d.mu = mu;
  d.gamma = gamma;
  d.gamma_prev = gamma_prev;
  d.beta_bar = beta_bar;
  const double gb = gamma * beta_bar;
  const double lm = lambda + mu;
  d.alpha = mu / lm;
  d.alpha_bar = gamma * mu / (gamma_prev * lm);
  d.theta = (4.0 - gb) * lm - 2.0 * lambda * lambda;
  d.theta_hat = 2.0 * lambda + 2.0 * mu - gb * lambda * lambda;
  d.theta_bar = lm - lambda * lambda;
  d.theta_tilde = lm * gb;
  d.theta_prime = (2.0 - gb) * mu + 2.0 * d.alpha_bar * d.theta_bar;
  d.omega = d.alpha_bar * lambda - (gamma / gamma_prev) * mu;
  return d;
}

DerivedParams derived_general(const Schedule& s, Index n, double mu) {
  DerivedParams d = derived_general(s.lambda(n), mu, s.gamma(n), s.gamma(n - 1), s.beta_bar);
  d.n = n;
  return d;
}

DerivedParams derived_closed_form(const Schedule& s, Index n) {
  DerivedParams d;
  d.n = n;
  const double l0 = s.lambda0;
  const double l = s.lambda(n);
  const double l2 = l * l;
  d.lambda = l;
  d.mu = mu_of(s, n);
  d.gamma = s.gamma(n);
  d.gamma_prev = s.gamma(n - 1);
  d.beta_bar = s.beta_bar;
  const double gb = d.gamma * s.beta_bar;
  d.alpha = (l - l0) / l;
  d.alpha_bar = (d.gamma / d.gamma_prev) * (l - l0) / l;
  d.theta = ((4.0 - gb - 2.0 * l0) / l0) * l2;
  d.theta_hat = ((2.0 - l0 * gb) / l0) * l2;
  d.theta_bar = ((1.0 - l0) / l0) * l2;
  d.theta_tilde = (gb / l0) * l2;
  d.theta_prime = (2.0 - gb) * d.mu + 2.0 * d.alpha_bar * d.theta_bar;
  d.omega = d.alpha_bar * l - (d.gamma / d.gamma_prev) * d.mu;
  return d;
}

DerivedParams params(const Schedule& s, Index n) { return derived_general(s, n, mu_of(s, n)); }

// ---------------------------------------------------------------------------

bool ValidationReport::ok() const {
  return std::all_of(items.begin(), items.end(), [](const ReportItem& i) { return i.passed; });
}

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& i : items) {
    if (!i.passed) out.push_back(i.name + ": " + i.detail);
  }
  return out;
}

const ReportItem* ValidationReport::find(const std::string& name) const {
  for (const auto& i : items) {
    if (i.name == name) return &i;
  }
  return nullptr;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Accumulates the first failing index and the worst value for one report item.
class ItemBuilder {
 public:
  explicit ItemBuilder(std::string name) { item_.name = std::move(name); }

  void fail(Index n, const std::string& why, double worst) {
    if (item_.passed) {
      item_.passed = false;
      item_.detail = "n=" + std::to_string(n) + ": " + why;
    }
    item_.worst = std::min(item_.worst, worst);
  }
  void observe(double worst) { item_.worst = std::min(item_.worst, worst); }
  void set_worst(double worst) { item_.worst = worst; }
  ReportItem done() { return std::move(item_); }

 private:
  ReportItem item_;
};

}  // namespace

ValidationReport validate_schedule(const Schedule& s, double beta, Index horizon) {
  if (horizon < 1) throw UsageError("validation horizon must be at least 1");
  ValidationReport report;

  ItemBuilder basics("parameters");
  if (!(s.eps > 0.0)) basics.fail(0, "eps must be positive, got " + fmt(s.eps), s.eps);
  if (!(s.eps0 >= 0.0)) basics.fail(0, "eps0 must be nonnegative", s.eps0);
  if (!(s.eps1 >= 0.0)) basics.fail(0, "eps1 must be nonnegative", s.eps1);
  if (!(s.lambda0 > 0.0)) basics.fail(0, "lambda0 must be positive", s.lambda0);
  if (!(s.beta_bar >= 0.0)) basics.fail(0, "beta_bar must be nonnegative", s.beta_bar);
  report.items.push_back(basics.done());

  ItemBuilder zeta("(i) zeta range");
  ItemBuilder step("(ii) gamma*beta_bar range");
  ItemBuilder growth("(iii) lambda growth");
  const double upper = 4.0 - 2.0 * s.lambda0 - s.eps;
  for (Index n = 0; n <= horizon; ++n) {
    const double z = s.zeta(n);
    const double zslack = std::min(z, 1.0 - s.eps0 - z);
    if (!(zslack >= 0.0)) {
      zeta.fail(n, "zeta=" + fmt(z) + " not in [0, " + fmt(1.0 - s.eps0) + "]", zslack);
    } else {
      zeta.observe(zslack);
    }

    const double g = s.gamma(n);
    if (!(g > 0.0) || !std::isfinite(g)) {
      step.fail(n, "gamma=" + fmt(g) + " must be positive", g);
      continue;
    }
    const double gb = g * s.beta_bar;
    const double gslack = std::min(gb - s.eps, upper - gb);
    if (!(gslack >= 0.0)) {
      step.fail(n, "gamma*beta_bar=" + fmt(gb) + " not in [" + fmt(s.eps) + ", " + fmt(upper) + "]",
                gslack);
    } else {
      step.observe(gslack);
    }

    if (n == 0) {
      const double f0 = s.growth(0.0);
      if (f0 != 1.0) growth.fail(0, "f(0)=" + fmt(f0) + " must equal 1", -std::abs(f0 - 1.0));
      continue;
    }
    const double ln = s.lambda(n);
    const double lp = s.lambda(n - 1);
    if (!(ln >= lp)) growth.fail(n, "lambda decreases: " + fmt(lp) + " -> " + fmt(ln), ln - lp);
    const double gl = g * ln;
    const double inc = gl - s.gamma(n - 1) * lp;
    const double bound = g * s.lambda0 - s.eps1;
    const double gslack2 = bound - inc;
    const double tol = 1e-12 * std::max(1.0, std::abs(gl));
    if (gslack2 < -tol) {
      growth.fail(n, "gamma*lambda increment " + fmt(inc) + " exceeds gamma*lambda0 - eps1 = " +
                         fmt(bound),
                  gslack2);
    } else {
      growth.observe(gslack2);
    }
  }
  report.items.push_back(zeta.done());
  report.items.push_back(step.done());
  report.items.push_back(growth.done());

  ItemBuilder cc("(iv) beta_bar >= beta");
  if (!(s.beta_bar >= beta)) {
    cc.fail(0, "beta_bar=" + fmt(s.beta_bar) + " < beta=" + fmt(beta), s.beta_bar - beta);
  } else {
    cc.set_worst(s.beta_bar - beta);
  }
  report.items.push_back(cc.done());
  return report;
}

ValidationReport validate_growth(const GrowthFunction& f, Index horizon, double gamma,
                                 double lambda0) {
  if (horizon < 2) throw UsageError("growth validation horizon must be at least 2");
  if (!f.eval) throw UsageError("growth function has no evaluator");
  ValidationReport report;

  ItemBuilder at_zero("f(0) = 1");
  const double f0 = f(0.0);
  if (f0 != 1.0) at_zero.fail(0, "f(0)=" + fmt(f0), -std::abs(f0 - 1.0));
  report.items.push_back(at_zero.done());

  ItemBuilder deriv("f'(0) in [0,1]");
  const double d0 = f.derivative_at_zero;
  if (!(d0 >= 0.0 && d0 <= 1.0)) deriv.fail(0, "f'(0)=" + fmt(d0), -std::abs(d0));
  report.items.push_back(deriv.done());

  ItemBuilder mono("non-decreasing");
  ItemBuilder concave("concave");
  ItemBuilder linear("f(n) <= 1 + n");
  double prev2 = 0.0;
  double prev = f0;
  for (Index n = 1; n <= horizon; ++n) {
    const double cur = f(static_cast<double>(n));
    if (!std::isfinite(cur)) {
      mono.fail(n, "f(n) is not finite", -1.0);
      break;
    }
    if (cur < prev) mono.fail(n, "f(n) < f(n-1)", cur - prev);
    const double lin = 1.0 + static_cast<double>(n) - cur;
    if (lin < -1e-12 * std::max(1.0, cur)) linear.fail(n, "f(n)=" + fmt(cur), lin);
    if (n >= 2) {
      const double second = cur - 2.0 * prev + prev2;
      if (second > 1e-12 * std::max(1.0, std::abs(cur))) {
        concave.fail(n, "second difference " + fmt(second) + " > 0", -second);
      }
    }
    prev2 = prev;
    prev = cur;
  }
  report.items.push_back(mono.done());
  report.items.push_back(concave.done());
  report.items.push_back(linear.done());

  report.derivative_at_zero = d0;
  if (d0 < 1.0) report.eps1_max = (1.0 - d0) * gamma * lambda0;
  return report;
}

ValidationReport check_param_identities(const Schedule& s, Index n) {
  const DerivedParams d = params(s, n);
  const double gb = d.gamma_beta_bar();
  const double tol = 1e-10 * std::max(1.0, std::abs(d.theta));
  const double l2 = d.lambda * d.lambda;
  const double lm = d.lambda + d.mu;
  ValidationReport report;

  auto identity = [&](const std::string& name, double lhs, double rhs) {
    ReportItem item;
    item.name = name;
    item.worst = std::abs(lhs - rhs);
    item.passed = item.worst <= tol;
    if (!item.passed) item.detail = "residual " + fmt(item.worst) + " > " + fmt(tol);
    report.items.push_back(item);
  };
  identity("theta = (2 - gb) theta_bar + theta_hat", d.theta,
           (2.0 - gb) * d.theta_bar + d.theta_hat);
  identity("theta = 2 theta_bar + (2 - gb)(lambda + mu)", d.theta,
           2.0 * d.theta_bar + (2.0 - gb) * lm);
  // This one is quadratic in lambda^2; scale its tolerance accordingly.
  {
    const double lhs = l2 * d.theta;
    const double rhs = d.theta_hat * lm - 2.0 * d.theta_bar * d.theta_bar;
    ReportItem item;
    item.name = "lambda^2 theta = theta_hat (lambda + mu) - 2 theta_bar^2";
    item.worst = std::abs(lhs - rhs);
    const double qtol = 1e-10 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    item.passed = item.worst <= qtol;
    if (!item.passed) item.detail = "residual " + fmt(item.worst) + " > " + fmt(qtol);
    report.items.push_back(item);
  }

  // Bound checks use a small relative slack so equality cases pass.
  auto lower = [&](const std::string& name, double value, double bound, double scale = 0.0) {
    ReportItem item;
    item.name = name;
    item.worst = value - bound;
    item.passed = value >= bound - 1e-12 * std::max({1.0, std::abs(bound), scale});
    if (!item.passed) item.detail = fmt(value) + " < " + fmt(bound);
    report.items.push_back(item);
  };
  auto upper = [&](const std::string& name, double value, double bound) {
    ReportItem item;
    item.name = name;
    item.worst = bound - value;
    item.passed = value <= bound + 1e-12 * std::max(1.0, std::abs(bound));
    if (!item.passed) item.detail = fmt(value) + " > " + fmt(bound);
    report.items.push_back(item);
  };
  const double e = s.eps;
  const double l0 = s.lambda0;
  lower("theta_tilde/theta_hat >= eps/2", d.theta_tilde / d.theta_hat, e / 2.0);
  lower("theta_hat/theta >= lambda0 eps/4", d.theta_hat / d.theta, l0 * e / 4.0);
  lower("theta/lambda^2 >= eps/lambda0", d.theta / l2, e / l0);
  upper("theta_tilde/theta_hat <= 4/(lambda0 eps)", d.theta_tilde / d.theta_hat, 4.0 / (l0 * e));
  upper("lambda^2/theta_hat <= 1/eps", l2 / d.theta_hat, 1.0 / e);
  upper("|theta_bar/theta| <= |1-lambda0|/eps", std::abs(d.theta_bar / d.theta),
        std::abs(1.0 - l0) / e);
  upper("|(2-gb)(lambda+mu)/theta| <= 2/eps", std::abs((2.0 - gb) * lm / d.theta), 2.0 / e);

  const DerivedParams next = params(s, n + 1);
  // A difference of two terms of size gamma lambda; compare at that scale.
  lower("gamma_n (lambda_n - alpha_bar_{n+1} lambda_{n+1}) >= eps1",
        d.gamma * (d.lambda - next.alpha_bar * next.lambda), s.eps1,
        d.gamma * std::max(d.lambda, next.alpha_bar * next.lambda));
  return report;
}

}  // namespace devsplit
