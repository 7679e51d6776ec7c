#include "devsplit/fuzz.hpp"

#include <algorithm>
#include <cmath>

#include "devsplit/errors.hpp"

namespace devsplit {

namespace {

Matrix gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Metric random_metric(std::mt19937_64& rng, int dim) {
  const Matrix b = gaussian_matrix(rng, dim, dim);
  Matrix m = b * b.transpose() / dim + 0.5 * Matrix::Identity(dim, dim);
  m = 0.5 * (m + m.transpose());
  return Metric(m);
}

Matrix random_psd_matrix(std::mt19937_64& rng, int dim) {
  const int rank = std::uniform_int_distribution<int>(1, dim)(rng);
  const Matrix b = gaussian_matrix(rng, dim, rank);
  Matrix q = b * b.transpose() / rank;
  return 0.5 * (q + q.transpose());
}

Matrix random_monotone_matrix(std::mt19937_64& rng, int dim) {
  const Matrix k = gaussian_matrix(rng, dim, dim);
  const double psd_weight = uniform(rng, 0.0, 1.0);
  return psd_weight * random_psd_matrix(rng, dim) + (k - k.transpose()) / 2.0;
}

ProblemInstance random_problem(std::mt19937_64& rng, int dim) {
  if (dim < 1) throw UsageError("random problem dimension must be positive");
  ProblemInstance p{nullptr, nullptr, random_metric(rng, dim), std::nullopt};
  const Matrix g = random_monotone_matrix(rng, dim);
  const Matrix q = random_psd_matrix(rng, dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x_star(dim);
  for (auto& e : x_star) e = normal(rng);
  const Vector offset = -(g + q) * x_star;
  p.a = make_linear_monotone(g);
  p.c = make_quad_grad(q, offset, cocoercivity_constant(q, p.metric));
  p.solution = x_star;
  return p;
}

Schedule random_schedule(std::mt19937_64& rng, double beta) {
  Schedule s;
  s.lambda0 = uniform(rng, 0.2, 1.8);
  const double upper = 4.0 - 2.0 * s.lambda0;
  const double c = uniform(rng, 0.05 * upper, 0.95 * upper);
  s.eps = std::min(c, upper - c) / 2.0;
  // gamma * beta <= c keeps beta_bar = c / gamma >= beta.
  s.gamma0 = beta > 0.0 ? uniform(rng, 0.3, 1.0) * c / beta : uniform(rng, 0.05, 1.0);
  s.beta_bar = c / s.gamma0;
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: s.growth = growth_constant(); break;
    case 1: s.growth = growth_power(uniform(rng, 0.05, 1.0)); break;
    case 2: s.growth = growth_log(); break;
    default: s.growth = growth_linear(); break;
  }
  s.eps0 = uniform(rng, 0.0, 0.5);
  return s;
}

FuzzCase random_case(std::uint64_t seed, int dim) {
  std::mt19937_64 rng(seed);
  if (dim == 0) dim = std::uniform_int_distribution<int>(2, 8)(rng);
  FuzzCase fc{random_problem(rng, dim), Schedule{}, Vector(dim), seed};
  fc.schedule = random_schedule(rng, fc.problem.beta());
  std::normal_distribution<double> normal(0.0, 3.0);
  for (auto& e : fc.x0) e = normal(rng);
  return fc;
}

}  // namespace devsplit
