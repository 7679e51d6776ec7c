#pragma once

#include <cstdint>
#include <random>

#include "devsplit/operators.hpp"
#include "devsplit/schedules.hpp"

namespace devsplit {

/// A random problem with known solution, an admissible schedule for it and a
/// starting point.
struct FuzzCase {
  ProblemInstance problem;
  Schedule schedule;
  Vector x0;
  std::uint64_t seed = 0;
};

Metric random_metric(std::mt19937_64& rng, int dim);
// Random PSD part plus random skew part.
Matrix random_monotone_matrix(std::mt19937_64& rng, int dim);
// Random PSD matrix, possibly rank deficient.
Matrix random_psd_matrix(std::mt19937_64& rng, int dim);
// Linear A, affine-gradient C with beta = its exact cocoercivity constant,
// random metric and solution.
ProblemInstance random_problem(std::mt19937_64& rng, int dim);
// Constant gamma; random lambda0, growth profile, gamma*beta_bar and zeta
// consistent with the standing parameter assumptions for `beta`.
Schedule random_schedule(std::mt19937_64& rng, double beta);

/// dim = 0 draws a dimension in [2, 8].
FuzzCase random_case(std::uint64_t seed, int dim = 0);

}  // namespace devsplit
