#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "devsplit/engine.hpp"
#include "devsplit/operators.hpp"
#include "devsplit/variants.hpp"

namespace devsplit::bench {

/// A = [[0,-1],[1,0]], C = 0, M = I, solution (0, 0).
ProblemInstance problem_skew2d();
/// A = normal cone of [0,1]^2, C x = diag(2,1) x + (-3, 0.5), solution (1, 0).
ProblemInstance problem_box_quad();
/// Three-dimensional linear monotone A with an affine-gradient C.
ProblemInstance problem_linear_quad();

std::vector<std::string> preset_names();
ProblemInstance preset(const std::string& name);

enum class Algo { fb, general, parallel, constant_kappa, tunable, accel_fb, halpern };
std::string to_string(Algo algo);
Algo parse_algo(const std::string& name);

enum class TolKind { dist, fpres };
enum class PolicyKind { zero, parallel, random };

struct RunConfig {
  std::string problem_name = "skew2d";
  std::optional<ProblemInstance> problem;  // built from problem_name when empty
  Algo algo = Algo::tunable;
  double e = 0.0;
  double kappa = 0.0;
  double gamma = 0.1;
  double beta_bar = 0.001;
  std::optional<double> lambda0;
  // Growth profile of general/parallel runs; fb always uses a constant one.
  GrowthFunction growth = growth_constant();
  double eps = 1e-9;
  double eps0 = 0.0;
  double eps1 = 0.0;
  // Parallel runs: the y-form recursion instead of the x-form.
  bool y_form = false;
  PolicyKind policy = PolicyKind::zero;
  std::uint64_t seed = 1;
  Vector x0 = Vector::Constant(2, 3.0);
  double tol = 1e-6;
  TolKind tol_kind = TolKind::dist;
  DistNorm dist_norm = DistNorm::euclidean;
  Index max_iter = 50'000'000;
  Index trace_stride = 1;
  bool retain_trace = true;
  std::size_t retain_limit = 0;
  bool diagnostics = false;
  std::string out_path;
  std::string svg_path;
};

const ProblemInstance& problem_of(RunConfig& cfg);

/// Schedule used by fb/general runs.
Schedule general_schedule(const RunConfig& cfg);
/// Variant configuration used by the closed-form algorithms.
VariantConfig variant_config(const RunConfig& cfg);

/// Validates the run configuration; throws ConfigError.
void validate(RunConfig& cfg);

struct RunOutcome {
  RunRecord record;
  // Filled when diagnostics are on for engine runs.
  std::optional<double> max_rel_delta;
  std::optional<double> min_descent_slack;
};

RunOutcome execute(RunConfig cfg, const TraceSink& sink = {});

struct SweepRow {
  double value = 0.0;
  Index iterations = 0;
  bool converged = false;
  std::string error;  // non-empty when the run failed with an exception
  std::vector<TraceRow> trace;  // retained only when the base config asks for it
};

struct SweepResult {
  std::string param_name;
  std::vector<SweepRow> rows;
};

/// One run per value (param "e" or "kappa"), rows in the order of `values`.
/// Runs execute on up to `threads` workers (0 = hardware or DEVSPLIT_THREADS).
SweepResult sweep(const RunConfig& base, const std::string& param,
                  const std::vector<double>& values, unsigned threads = 0);

/// Worker count honoring the DEVSPLIT_THREADS cap.
unsigned sweep_threads(unsigned requested, std::size_t jobs);

}  // namespace devsplit::bench
