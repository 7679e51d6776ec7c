#include "devsplit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "devsplit/errors.hpp"

namespace devsplit::bench {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

double number(const json& j, const char* key) {
  if (!j.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.get<double>();
}

Vector vector_of(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string("'") + key + "' must be a non-empty array of numbers");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], key);
  return v;
}

Matrix matrix_of(const json& j, const char* key) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(std::string("'") + key + "' must be a row-major array of arrays");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string("'") + key + "' rows must all have the same length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)], key);
  }
  return m;
}

const json& required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key);
}

std::string type_of(const json& op) {
  if (!op.is_object() || !op.contains("type") || !op["type"].is_string()) {
    throw ConfigError("operator spec needs a string 'type'");
  }
  return op["type"].get<std::string>();
}

Matrix skew2d_matrix() {
  Matrix g(2, 2);
  g << 0.0, -1.0, 1.0, 0.0;
  return g;
}

MonotoneOpPtr monotone_from(const json& op) {
  const std::string type = type_of(op);
  if (type == "skew2d") return make_linear_monotone(skew2d_matrix());
  if (type == "linear") return make_linear_monotone(matrix_of(required(op, "G"), "G"));
  if (type == "zero") return make_zero_monotone(static_cast<int>(number(required(op, "dim"), "dim")));
  if (type == "box") return make_box(vector_of(required(op, "lo"), "lo"), vector_of(required(op, "hi"), "hi"));
  throw ConfigError("unknown monotone operator type '" + type + "'");
}

CocoerciveOpPtr cocoercive_from(const json& op) {
  const std::string type = type_of(op);
  if (type == "zero") {
    const double beta = op.contains("beta") ? number(op["beta"], "beta") : 0.0;
    return make_zero_cocoercive(static_cast<int>(number(required(op, "dim"), "dim")), beta);
  }
  if (type == "quad_grad") {
    return make_quad_grad(matrix_of(required(op, "Q"), "Q"), vector_of(required(op, "q"), "q"),
                          number(required(op, "beta"), "beta"));
  }
  throw ConfigError("unknown cocoercive operator type '" + type + "'");
}

ProblemInstance problem_from(const json& j) {
  if (j.is_string()) return preset(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("problem must be a preset name or an object");
  MonotoneOpPtr a = monotone_from(required(j, "A"));
  const int dim = a->dim();
  CocoerciveOpPtr c = j.contains("C") ? cocoercive_from(j["C"]) : make_zero_cocoercive(dim);
  Metric m = j.contains("metric") ? Metric(matrix_of(j["metric"], "metric")) : Metric::identity(dim);
  ProblemInstance p{std::move(a), std::move(c), std::move(m), std::nullopt};
  if (j.contains("solution")) p.solution = vector_of(j["solution"], "solution");
  try {
    p.validate();
  } catch (const UsageError& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what());
  }
  return p;
}

GrowthFunction growth_from(const json& j) {
  if (!j.is_object()) throw ConfigError("growth must be an object with a 'kind'");
  const std::string kind = required(j, "kind").get<std::string>();
  if (kind == "constant") return growth_constant();
  if (kind == "linear") return growth_linear();
  if (kind == "log") return growth_log();
  if (kind == "power") return growth_power(number(required(j, "e"), "e"));
  throw ConfigError("unknown growth kind '" + kind + "'");
}

void apply_schedule(const json& s, RunConfig& cfg) {
  if (!s.is_object()) throw ConfigError("schedule must be an object");
  if (s.contains("lambda0")) cfg.lambda0 = number(s["lambda0"], "lambda0");
  if (s.contains("growth")) cfg.growth = growth_from(s["growth"]);
  if (s.contains("gamma")) cfg.gamma = number(s["gamma"], "gamma");
  if (s.contains("beta_bar")) cfg.beta_bar = number(s["beta_bar"], "beta_bar");
  if (s.contains("eps")) cfg.eps = number(s["eps"], "eps");
  if (s.contains("eps0")) cfg.eps0 = number(s["eps0"], "eps0");
  if (s.contains("eps1")) cfg.eps1 = number(s["eps1"], "eps1");
  if (s.contains("zeta")) {
    if (!s["zeta"].is_string() || s["zeta"].get<std::string>() != "one-minus-eps0") {
      throw ConfigError("only zeta = \"one-minus-eps0\" is supported in config files");
    }
  }
  if (s.contains("kappa")) {
    const json& k = s["kappa"];
    if (k.is_number()) {
      cfg.kappa = k.get<double>();
    } else if (k.is_object() && k.contains("value")) {
      cfg.kappa = number(k["value"], "kappa.value");
    } else {
      throw ConfigError("schedule.kappa must be a number or {\"value\": x}");
    }
  }
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

}  // namespace

ProblemInstance problem_from_json(const std::string& text) {
  return guarded([&] { return problem_from(parse(text)); });
}

GrowthFunction growth_from_json(const std::string& text) {
  return guarded([&] { return growth_from(parse(text)); });
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vector parse_vector_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number in '" + text + "'");
    }
  }
  if (values.empty()) throw ConfigError("empty vector '" + text + "'");
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

namespace {

RunConfig apply_run_config(const json& j, RunConfig cfg) {
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  if (j.contains("problem")) {
    if (j["problem"].is_string()) {
      cfg.problem_name = j["problem"].get<std::string>();
      cfg.problem.reset();
    } else {
      cfg.problem_name = "custom";
      cfg.problem = problem_from(j["problem"]);
    }
  }
  if (j.contains("algo")) cfg.algo = parse_algo(j["algo"].get<std::string>());
  if (j.contains("e")) cfg.e = number(j["e"], "e");
  if (j.contains("kappa")) cfg.kappa = number(j["kappa"], "kappa");
  if (j.contains("gamma")) cfg.gamma = number(j["gamma"], "gamma");
  if (j.contains("beta_bar")) cfg.beta_bar = number(j["beta_bar"], "beta_bar");
  if (j.contains("lambda0")) cfg.lambda0 = number(j["lambda0"], "lambda0");
  if (j.contains("schedule")) apply_schedule(j["schedule"], cfg);
  if (j.contains("x0")) cfg.x0 = vector_of(j["x0"], "x0");
  if (j.contains("tol")) cfg.tol = number(j["tol"], "tol");
  if (j.contains("tol_kind")) {
    const std::string k = j["tol_kind"].get<std::string>();
    if (k == "dist") cfg.tol_kind = TolKind::dist;
    else if (k == "fpres") cfg.tol_kind = TolKind::fpres;
    else throw ConfigError("tol_kind must be 'dist' or 'fpres'");
  }
  if (j.contains("dist_norm")) {
    const std::string k = j["dist_norm"].get<std::string>();
    if (k == "euclidean") cfg.dist_norm = DistNorm::euclidean;
    else if (k == "m") cfg.dist_norm = DistNorm::metric;
    else throw ConfigError("dist_norm must be 'euclidean' or 'm'");
  }
  if (j.contains("max_iter")) cfg.max_iter = static_cast<Index>(number(j["max_iter"], "max_iter"));
  if (j.contains("trace_stride")) {
    cfg.trace_stride = static_cast<Index>(number(j["trace_stride"], "trace_stride"));
  }
  if (j.contains("diagnostics")) cfg.diagnostics = j["diagnostics"].get<bool>();
  if (j.contains("policy")) {
    const std::string k = j["policy"].get<std::string>();
    if (k == "zero") cfg.policy = PolicyKind::zero;
    else if (k == "parallel") cfg.policy = PolicyKind::parallel;
    else if (k == "random") cfg.policy = PolicyKind::random;
    else throw ConfigError("policy must be 'zero', 'parallel' or 'random'");
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("form")) {
    const std::string k = j["form"].get<std::string>();
    if (k != "x" && k != "y") throw ConfigError("form must be 'x' or 'y'");
    cfg.y_form = k == "y";
  }
  if (j.contains("out")) cfg.out_path = j["out"].get<std::string>();
  if (j.contains("svg")) cfg.svg_path = j["svg"].get<std::string>();
  return cfg;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, RunConfig base) {
  return guarded([&] { return apply_run_config(parse(text), std::move(base)); });
}

}  // namespace devsplit::bench
