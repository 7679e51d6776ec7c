#pragma once

#include <functional>
#include <string>

#include "devsplit/engine.hpp"
#include "devsplit/operators.hpp"
#include "devsplit/schedules.hpp"

namespace devsplit {

enum class VariantKind {
  parallel_x_form,
  parallel_y_form,
  constant_kappa,
  tunable_e,
  accelerated_fb,
  halpern,
};

std::string to_string(VariantKind kind);
VariantKind parse_variant_kind(const std::string& name);

/// Closed-form special cases of the general method. Every member of the
/// parallel-deviation family sets u_{n+1} = kappa_n ((4 - c - 2 lambda0)/2) w_n
/// where w_n is the ell_n norm argument and c = gamma beta_bar.
struct VariantConfig {
  VariantKind kind = VariantKind::tunable_e;
  double kappa = 0.0;
  // Per-n kappa for the parallel family; overrides `kappa` when set.
  std::function<double(Index)> kappa_rule;
  double e = 0.0;
  double lambda0 = 1.0;
  // Growth profile of the parallel family; the tunable and accelerated
  // variants derive theirs from `e`.
  GrowthFunction growth = growth_constant();
  double gamma = 0.1;
  double beta_bar = 0.001;
  double eps = 1e-9;
  double eps0 = 0.0;
  // Per-n safeguard fraction; empty means 1 - eps0.
  std::function<double(Index)> zeta_rule;

  double gamma_beta_bar() const { return gamma * beta_bar; }
  double kappa_at(Index n) const { return kappa_rule ? kappa_rule(n) : kappa; }
};

VariantConfig make_parallel(VariantKind form, double kappa, double lambda0 = 1.0,
                            GrowthFunction growth = growth_constant(), double gamma = 0.1,
                            double beta_bar = 0.001);
VariantConfig make_constant_kappa(double kappa, double gamma = 0.1, double beta_bar = 0.001);
// lambda0 = (1 - gamma beta_bar / 4)^e, lambda_n = lambda0 (1+n)^e,
// kappa_n = (lambda_{n+1} - lambda0) / lambda_{n+1}.
VariantConfig make_tunable(double e, double gamma = 0.1, double beta_bar = 0.001);
VariantConfig make_accelerated_fb(double gamma = 0.1, double beta_bar = 0.001);
// gamma = 2 / beta, beta_bar = beta.
VariantConfig make_halpern(double beta);

/// The Schedule the variant corresponds to in the general method.
Schedule schedule_for(const VariantConfig& cfg);

/// Throws ConfigError listing every violated requirement of the variant
/// against the problem.
void validate(const VariantConfig& cfg, const ProblemInstance& problem,
              Index horizon = 10000);

RunRecord run_parallel_x_form(const VariantConfig& cfg, const ProblemInstance& problem,
                              const Vector& x0, const StoppingRule& stop,
                              const RunOptions& options = {});
RunRecord run_parallel_y_form(const VariantConfig& cfg, const ProblemInstance& problem,
                              const Vector& x0, const StoppingRule& stop,
                              const RunOptions& options = {});
RunRecord run_constant_kappa(const VariantConfig& cfg, const ProblemInstance& problem,
                             const Vector& p_init, const StoppingRule& stop,
                             const RunOptions& options = {});
RunRecord run_tunable(const VariantConfig& cfg, const ProblemInstance& problem,
                      const Vector& y0, const StoppingRule& stop, const RunOptions& options = {});
RunRecord run_accelerated_fb(const VariantConfig& cfg, const ProblemInstance& problem,
                             const Vector& y0, const StoppingRule& stop,
                             const RunOptions& options = {});
/// Requires a zero A and gamma beta = 2; iterates
/// y_{n+1} = y0/(n+2) + ((n+1)/(n+2)) N y_n with N y = y - gamma M^{-1} C y.
RunRecord run_halpern(const VariantConfig& cfg, const ProblemInstance& problem,
                      const Vector& y0, const StoppingRule& stop, const RunOptions& options = {});

/// Dispatches on cfg.kind.
RunRecord run_variant(const VariantConfig& cfg, const ProblemInstance& problem, const Vector& x0,
                      const StoppingRule& stop, const RunOptions& options = {});

/// Largest kappa_n^2 (lambda_{n+1}/lambda_n)^2 - zeta_{n+1} allowed: the
/// parallel deviation meets the safeguard whenever this is <= 0.
double scalar_safeguard_excess(const VariantConfig& cfg, const Schedule& s, Index n);

/// Parallel-family deviation rule as a policy for the general engine:
/// u = kappa_n ((4 - c - 2 lambda0)/2) w_n, v = ((2 - c)/(2 - lambda0 c)) u.
class ParallelDeviationPolicy final : public DeviationPolicy {
 public:
  explicit ParallelDeviationPolicy(VariantConfig cfg);
  Deviation propose(const StepRecord& record, double budget, const DerivedParams& next,
                    const Metric& m) override;

 private:
  VariantConfig cfg_;
  Schedule schedule_;
};

/// State of the x-form recursion at the start of iteration n.
struct VariantState {
  Index n = 0;
  Vector x;
  Vector u;
  Vector prev_y;
  Vector prev_p;
  double ell_prev = 0.0;
};

/// Stepwise x-form recursion, exposing its state for embedding.
class ParallelXFormStepper {
 public:
  struct Iterate {
    Index n = 0;
    Vector y;
    Vector p;
  };

  ParallelXFormStepper(const VariantConfig& cfg, const ProblemInstance& problem,
                       const Vector& x0);

  Iterate step();
  const VariantState& state() const noexcept { return state_; }
  const Schedule& schedule() const noexcept { return schedule_; }

 private:
  VariantConfig cfg_;
  const ProblemInstance& problem_;
  Schedule schedule_;
  ForwardBackwardMap fb_;
  VariantState state_;
};

struct EmbeddedState {
  Vector u;
  Vector v;
  SolverState state;
  // ||y_n - z_n|| computed with the general update formulas; zero in exact
  // arithmetic.
  double yz_gap = 0.0;
};

/// Maps an x-form state to the general method: v_n = ((2-c)/(2-lambda0 c)) u_n
/// and z_{n-1} = y_{n-1}.
EmbeddedState embed_to_general(const VariantConfig& cfg, const VariantState& vs);

}  // namespace devsplit
