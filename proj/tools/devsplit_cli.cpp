// devsplit: run, sweep and verify deviation-based forward-backward solvers.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "devsplit/bench.hpp"
#include "devsplit/config.hpp"
#include "devsplit/errors.hpp"
#include "devsplit/export.hpp"
#include "devsplit/verify.hpp"

namespace {

using namespace devsplit;
using namespace devsplit::bench;

constexpr int kExitConverged = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNotConverged = 2;

// Raw flag values; only flags given on the command line override the config.
struct RunFlags {
  std::string config;
  std::string problem;
  std::string algo;
  double e = 0.0;
  double kappa = 0.0;
  double gamma = 0.1;
  double beta_bar = 0.001;
  double lambda0 = 1.0;
  std::string x0 = "3,3";
  double tol = 1e-6;
  std::string tol_kind = "dist";
  std::string dist_norm = "euclidean";
  double max_iter = 5e7;
  long long trace_stride = 1;
  std::string out;
  std::string svg;
  std::string diagnostics = "off";
  std::string policy = "zero";
  std::uint64_t seed = 1;
  std::string form = "x";
  std::vector<CLI::Option*> opts;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  auto add = [&](CLI::Option* o) { f.opts.push_back(o); };
  app->add_option("--config", f.config, "JSON run configuration; flags override its fields");
  add(app->add_option("--problem", f.problem,
                      "skew2d|box-quad|linear-quad|zero-quad or @file.json"));
  add(app->add_option("--algo", f.algo,
                      "fb|general|parallel|constant-kappa|tunable|accel-fb|halpern")
          ->check(CLI::IsMember(
              {"fb", "general", "parallel", "constant-kappa", "tunable", "accel-fb", "halpern"})));
  add(app->add_option("--e", f.e, "growth exponent of the tunable variant"));
  add(app->add_option("--kappa", f.kappa, "momentum coefficient"));
  add(app->add_option("--gamma", f.gamma, "step size")->capture_default_str());
  add(app->add_option("--beta-bar", f.beta_bar, "cocoercivity bound used by the method")
          ->capture_default_str());
  add(app->add_option("--lambda0", f.lambda0, "initial relaxation"));
  add(app->add_option("--x0", f.x0, "starting point, comma separated")->capture_default_str());
  add(app->add_option("--tol", f.tol, "stopping tolerance")->capture_default_str());
  add(app->add_option("--tol-kind", f.tol_kind, "dist: ||p - x*||, fpres: ||p - y||_M")
          ->check(CLI::IsMember({"dist", "fpres"})));
  add(app->add_option("--dist-norm", f.dist_norm, "norm of the distance criterion")
          ->check(CLI::IsMember({"euclidean", "m"})));
  add(app->add_option("--max-iter", f.max_iter, "iteration cap")->capture_default_str());
  add(app->add_option("--trace-stride", f.trace_stride, "keep every N-th trace row")
          ->check(CLI::PositiveNumber));
  add(app->add_option("--out", f.out, "CSV output path"));
  add(app->add_option("--svg", f.svg, "SVG output path"));
  add(app->add_option("--diagnostics", f.diagnostics, "Lyapunov columns for fb/general runs")
          ->check(CLI::IsMember({"on", "off"})));
  add(app->add_option("--policy", f.policy, "deviation policy of general runs")
          ->check(CLI::IsMember({"zero", "parallel", "random"})));
  add(app->add_option("--seed", f.seed, "seed of the random policy"));
  add(app->add_option("--form", f.form, "parallel recursion: x or y")
          ->check(CLI::IsMember({"x", "y"})));
}

bool given(const RunFlags& f, const std::string& name) {
  for (const auto* o : f.opts) {
    if (o->check_name(name)) return o->count() > 0;
  }
  return false;
}

RunConfig build_config(const RunFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = run_config_from_json(read_text_file(f.config), cfg);
  if (given(f, "--problem")) {
    if (!f.problem.empty() && f.problem[0] == '@') {
      cfg.problem_name = f.problem.substr(1);
      cfg.problem = problem_from_json(read_text_file(cfg.problem_name));
    } else {
      cfg.problem_name = f.problem;
      cfg.problem.reset();
    }
  }
  if (given(f, "--algo")) cfg.algo = parse_algo(f.algo);
  if (given(f, "--e")) cfg.e = f.e;
  if (given(f, "--kappa")) cfg.kappa = f.kappa;
  if (given(f, "--gamma")) cfg.gamma = f.gamma;
  if (given(f, "--beta-bar")) cfg.beta_bar = f.beta_bar;
  if (given(f, "--lambda0")) cfg.lambda0 = f.lambda0;
  if (given(f, "--x0")) cfg.x0 = parse_vector_list(f.x0);
  if (given(f, "--tol")) cfg.tol = f.tol;
  if (given(f, "--tol-kind")) cfg.tol_kind = f.tol_kind == "dist" ? TolKind::dist : TolKind::fpres;
  if (given(f, "--dist-norm")) {
    cfg.dist_norm = f.dist_norm == "m" ? DistNorm::metric : DistNorm::euclidean;
  }
  if (given(f, "--max-iter")) {
    if (!(f.max_iter >= 0.0) || f.max_iter != std::floor(f.max_iter)) {
      throw ConfigError("--max-iter must be a nonnegative integer");
    }
    cfg.max_iter = static_cast<Index>(f.max_iter);
  }
  if (given(f, "--trace-stride")) cfg.trace_stride = f.trace_stride;
  if (given(f, "--out")) cfg.out_path = f.out;
  if (given(f, "--svg")) cfg.svg_path = f.svg;
  if (given(f, "--diagnostics")) cfg.diagnostics = f.diagnostics == "on";
  if (given(f, "--policy")) {
    cfg.policy = f.policy == "zero"       ? PolicyKind::zero
                 : f.policy == "parallel" ? PolicyKind::parallel
                                          : PolicyKind::random;
  }
  if (given(f, "--seed")) cfg.seed = f.seed;
  if (given(f, "--form")) cfg.y_form = f.form == "y";
  return cfg;
}

std::string label_for(const std::string& param, double value) {
  std::ostringstream os;
  os << param << '=' << value;
  return os.str();
}

void print_errors(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    for (const auto& item : ce->items()) std::cerr << "  - " << item << '\n';
  }
}

int run_command(const RunFlags& flags) {
  RunConfig cfg = build_config(flags);
  validate(cfg);
  const int dim = problem_of(cfg).dim();
  const bool diag_columns = cfg.diagnostics;

  std::ofstream csv;
  TraceSink sink;
  if (!cfg.out_path.empty()) {
    csv.open(cfg.out_path);
    if (!csv) throw ConfigError("cannot write '" + cfg.out_path + "'");
    csv << trace_csv_header(dim, diag_columns) << '\n';
    sink = [&](const TraceRow& row) { csv << trace_csv_row(row, diag_columns) << '\n'; };
  }
  cfg.retain_trace = !cfg.svg_path.empty();
  if (cfg.retain_trace) cfg.retain_limit = 200000;
  const RunOutcome out = execute(cfg, sink);
  const RunRecord& rec = out.record;

  if (!cfg.svg_path.empty()) {
    const SvgMode mode = dim == 2 ? SvgMode::trajectory : SvgMode::distance;
    export_svg(cfg.svg_path, {{rec.algo, rec.trace}}, mode, rec.algo);
  }
  std::cout << "algo: " << rec.algo << '\n';
  std::cout << "iterations: " << rec.iterations << '\n';
  std::cout << "converged: " << (rec.converged ? "yes" : "no") << '\n';
  std::cout << "final_dist: " << format_double(rec.final_dist) << '\n';
  std::cout << "final_fp_res: " << format_double(rec.final_fp_res) << '\n';
  if (out.max_rel_delta) {
    std::cout << "max_rel_identity_residual: " << format_double(*out.max_rel_delta) << '\n';
    std::cout << "min_descent_slack: " << format_double(*out.min_descent_slack) << '\n';
  }
  return rec.converged ? kExitConverged : kExitNotConverged;
}

std::vector<double> parse_values(const std::string& values, const std::string& range) {
  if (!values.empty() && !range.empty()) throw ConfigError("give --values or --range, not both");
  if (!values.empty()) {
    const Vector v = parse_vector_list(values);
    return {v.data(), v.data() + v.size()};
  }
  if (range.empty()) throw ConfigError("sweep needs --values or --range");
  std::vector<double> parts;
  std::stringstream ss(range);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() != 3 || !(parts[2] > 0.0)) {
    throw ConfigError("--range expects start:stop:step with step > 0");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long i = 0; i <= count; ++i) {
    // Round to 12 decimals so 0.1 steps print as 0.3, not 0.30000000000000004.
    const double v = parts[0] + static_cast<double>(i) * parts[2];
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

int sweep_command(const RunFlags& flags, const std::string& param, const std::string& values,
                  const std::string& range, unsigned threads) {
  RunConfig cfg = build_config(flags);
  const std::vector<double> vals = parse_values(values, range);
  cfg.retain_trace = !cfg.svg_path.empty();
  if (cfg.retain_trace) cfg.retain_limit = 20000;
  const SweepResult result = sweep(cfg, param, vals, threads);

  if (cfg.out_path.empty()) {
    write_sweep_csv(std::cout, result);
  } else {
    std::ofstream csv(cfg.out_path);
    if (!csv) throw ConfigError("cannot write '" + cfg.out_path + "'");
    write_sweep_csv(csv, result);
  }
  if (!cfg.svg_path.empty()) {
    std::vector<SvgSeries> series;
    for (const auto& row : result.rows) series.push_back({label_for(param, row.value), row.trace});
    export_svg(cfg.svg_path, series, SvgMode::distance, "sweep over " + param);
  }
  bool all = true;
  for (const auto& row : result.rows) {
    if (!row.error.empty()) std::cerr << label_for(param, row.value) << ": " << row.error << '\n';
    all = all && row.converged;
  }
  return all ? kExitConverged : kExitNotConverged;
}

int verify_command(const std::string& suite, int trials, std::uint64_t seed, int dim, int steps) {
  const VerifyReport report = verify_suite(suite, trials, seed, dim, steps);
  std::cout << "suite: " << report.suite << " (trials " << report.trials << ")\n";
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": worst "
              << format_double(c.worst) << (c.upper ? " <= " : " >= -")
              << format_double(c.tolerance) << '\n';
  }
  for (const auto& note : report.notes) std::cout << "note: " << note << '\n';
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deviation-based forward-backward solvers for 0 in Ax + Cx"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one configuration to its stopping rule");
  add_run_flags(run, run_flags);

  RunFlags sweep_flags;
  std::string param = "e";
  std::string values;
  std::string range;
  unsigned threads = 0;
  CLI::App* sw = app.add_subcommand("sweep", "iteration counts over a parameter grid");
  add_run_flags(sw, sweep_flags);
  sw->add_option("--param", param, "parameter to sweep")->check(CLI::IsMember({"e", "kappa"}));
  sw->add_option("--values", values, "comma separated values");
  sw->add_option("--range", range, "start:stop:step (inclusive)");
  sw->add_option("--threads", threads, "worker threads (capped by DEVSPLIT_THREADS)");

  std::string suite = "lyapunov";
  int trials = 20;
  std::uint64_t seed = 1;
  int dim = 0;
  int steps = 200;
  CLI::App* ver = app.add_subcommand("verify", "numerical certification suites");
  ver->add_option("--suite", suite, "lyapunov|identities|rates")
      ->check(CLI::IsMember({"lyapunov", "identities", "rates"}));
  ver->add_option("--trials", trials, "number of random trials")->check(CLI::PositiveNumber);
  ver->add_option("--seed", seed, "base seed");
  ver->add_option("--dim", dim, "problem dimension (0 draws 2..8)");
  ver->add_option("--steps", steps, "steps per run")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*run) return run_command(run_flags);
    if (*sw) return sweep_command(sweep_flags, param, values, range, threads);
    if (*ver) return verify_command(suite, trials, seed, dim, steps);
  } catch (const devsplit::Error& e) {
    print_errors(e);
    return kExitConfigError;
  } catch (const std::exception& e) {
    print_errors(e);
    return kExitConfigError;
  }
  return kExitConfigError;
}
