#pragma once

#include <string>

#include "devsplit/bench.hpp"
#include "devsplit/operators.hpp"
#include "devsplit/schedules.hpp"

namespace devsplit::bench {

/// Problem from a JSON object:
///   {"A": OP, "C": OP, "metric": [[...], ...], "solution": [...]}
/// OP is one of {"type":"skew2d"}, {"type":"linear","G":[[...]]},
/// {"type":"zero","dim":n}, {"type":"quad_grad","Q":[[...]],"q":[...],"beta":x},
/// {"type":"box","lo":[...],"hi":[...]}. "metric" and "solution" are optional;
/// the metric defaults to the identity. A preset name string is accepted too.
ProblemInstance problem_from_json(const std::string& text);

/// Reads a JSON document from disk; throws ConfigError if unreadable.
std::string read_text_file(const std::string& path);

/// Applies the fields of a JSON run configuration on top of `base`. Recognized
/// keys: problem, algo, e, kappa, gamma, beta_bar, lambda0, x0, tol, tol_kind,
/// dist_norm, max_iter, trace_stride, diagnostics, policy, seed, form, out, svg,
/// schedule {lambda0, growth, gamma, beta_bar, zeta, eps, eps0, eps1, kappa}.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});

/// {"kind":"power","e":x} | {"kind":"log"} | {"kind":"constant"} | {"kind":"linear"}
GrowthFunction growth_from_json(const std::string& text);

/// Parses "a,b,c" into a vector.
Vector parse_vector_list(const std::string& text);

}  // namespace devsplit::bench
