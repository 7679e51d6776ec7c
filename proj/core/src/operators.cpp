#include "devsplit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "devsplit/errors.hpp"

namespace devsplit {

namespace {

constexpr double kPsdTol = 1e-10;

void require_dim(int expected, const Vector& v, const char* what) {
  if (v.size() != expected) {
    throw UsageError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                     ", got " + std::to_string(v.size()));
  }
}

void require_metric_dim(int expected, const Metric& m) {
  if (m.dim() != expected) {
    throw UsageError("metric dimension " + std::to_string(m.dim()) +
                     " does not match operator dimension " + std::to_string(expected));
  }
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw UsageError("resolvent step size must be positive, got " + std::to_string(gamma));
  }
}

double min_symmetric_eigenvalue(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------

LinearMonotoneOp::LinearMonotoneOp(Matrix g) : g_(std::move(g)) {
  if (g_.rows() == 0 || g_.rows() != g_.cols()) {
    throw OperatorContractError("linear monotone operator needs a non-empty square matrix");
  }
  if (!g_.allFinite()) throw OperatorContractError("linear operator has non-finite entries");
  const double lo = min_symmetric_eigenvalue(g_ + g_.transpose());
  if (lo < -kPsdTol) {
    throw OperatorContractError("G + G^T has eigenvalue " + std::to_string(lo) +
                                " < 0; operator is not monotone");
  }
}

const LinearMonotoneOp::Factorization& LinearMonotoneOp::factorization(const Metric& m,
                                                                       double gamma) const {
  {
    std::shared_lock lock(cache_mutex_);
    for (const auto& f : cache_) {
      if (f->gamma == gamma && f->metric == m.matrix()) return *f;
    }
  }
  std::unique_lock lock(cache_mutex_);
  for (const auto& f : cache_) {
    if (f->gamma == gamma && f->metric == m.matrix()) return *f;
  }
  auto f = std::make_unique<Factorization>();
  f->gamma = gamma;
  f->metric = m.matrix();
  f->lu.compute(m.matrix() + gamma * g_);
  if (!(f->lu.rcond() > 1e-14)) {
    throw OperatorContractError("M + gamma G is numerically singular");
  }
  cache_.push_back(std::move(f));
  return *cache_.back();
}

Vector LinearMonotoneOp::resolvent(const Metric& m, double gamma, const Vector& r) const {
  require_gamma(gamma);
  require_metric_dim(dim(), m);
  require_dim(dim(), r, "resolvent right-hand side");
  return factorization(m, gamma).lu.solve(r);
}

std::size_t LinearMonotoneOp::cached_factorizations() const {
  std::shared_lock lock(cache_mutex_);
  return cache_.size();
}

// ---------------------------------------------------------------------------

ZeroMonotoneOp::ZeroMonotoneOp(int dim) : dim_(dim) {
  if (dim <= 0) throw UsageError("operator dimension must be positive");
}

Vector ZeroMonotoneOp::resolvent(const Metric& m, double gamma, const Vector& r) const {
  require_gamma(gamma);
  require_metric_dim(dim_, m);
  require_dim(dim_, r, "resolvent right-hand side");
  return m.apply_inverse(r);
}

// ---------------------------------------------------------------------------

BoxNormalConeOp::BoxNormalConeOp(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() == 0 || lo_.size() != hi_.size()) {
    throw UsageError("box bounds must be non-empty and of equal dimension");
  }
  if ((lo_.array() > hi_.array()).any()) throw UsageError("box has lo > hi");
  if (lo_.array().isNaN().any() || hi_.array().isNaN().any()) {
    throw UsageError("box bounds contain NaN");
  }
}

Vector BoxNormalConeOp::resolvent(const Metric& m, double gamma, const Vector& r) const {
  require_gamma(gamma);
  require_metric_dim(dim(), m);
  require_dim(dim(), r, "resolvent right-hand side");
  if (!m.is_diagonal()) {
    throw UsageError("box normal-cone resolvent requires an identity or diagonal metric");
  }
  // m_i p_i + gamma a_i = r_i with a_i in N_[lo_i, hi_i](p_i)  =>  p_i = clip(r_i / m_i)
  Vector p = m.apply_inverse(r);
  return p.cwiseMax(lo_).cwiseMin(hi_);
}

// ---------------------------------------------------------------------------

ZeroCocoerciveOp::ZeroCocoerciveOp(int dim, double beta) : dim_(dim), beta_(beta) {
  if (dim <= 0) throw UsageError("operator dimension must be positive");
  if (!(beta >= 0.0)) throw UsageError("cocoercivity constant must be nonnegative");
}

Vector ZeroCocoerciveOp::eval(const Vector& x) const {
  require_dim(dim_, x, "C argument");
  return Vector::Zero(dim_);
}

QuadGradOp::QuadGradOp(Matrix q_mat, Vector q_vec, double beta)
    : q_(std::move(q_mat)), offset_(std::move(q_vec)), beta_(beta) {
  if (q_.rows() == 0 || q_.rows() != q_.cols() || offset_.size() != q_.rows()) {
    throw UsageError("quad_grad needs square Q and matching q");
  }
  if (!(beta_ >= 0.0)) throw UsageError("cocoercivity constant must be nonnegative");
  const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
  if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw OperatorContractError("quad_grad Q must be symmetric");
  }
  if (min_symmetric_eigenvalue(q_) < -kPsdTol * scale) {
    throw OperatorContractError("quad_grad Q must be positive semidefinite");
  }
}

Vector QuadGradOp::eval(const Vector& x) const {
  require_dim(dim(), x, "C argument");
  return q_ * x + offset_;
}

// ---------------------------------------------------------------------------

MonotoneOpPtr make_linear_monotone(const Matrix& g) {
  return std::make_shared<LinearMonotoneOp>(g);
}
MonotoneOpPtr make_zero_monotone(int dim) { return std::make_shared<ZeroMonotoneOp>(dim); }
MonotoneOpPtr make_box(const Vector& lo, const Vector& hi) {
  return std::make_shared<BoxNormalConeOp>(lo, hi);
}
CocoerciveOpPtr make_zero_cocoercive(int dim, double beta) {
  return std::make_shared<ZeroCocoerciveOp>(dim, beta);
}
CocoerciveOpPtr make_quad_grad(const Matrix& q_mat, const Vector& q_vec, double beta) {
  return std::make_shared<QuadGradOp>(q_mat, q_vec, beta);
}

double cocoercivity_constant(const Matrix& q_mat, const Metric& m) {
  // eigenvalues of L^{-1} Q L^{-T} with M = L L^T
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(q_mat, m.matrix(),
                                                          Eigen::EigenvaluesOnly);
  return std::max(0.0, solver.eigenvalues().maxCoeff());
}

Vector resolvent(const MonotoneOp& a, const Metric& m, double gamma, const Vector& r) {
  return a.resolvent(m, gamma, r);
}

Vector eval_c(const CocoerciveOp& c, const Vector& x) { return c.eval(x); }

CocoercivityReport check_cocoercivity(const CocoerciveOp& c, const Metric& m, int samples,
                                      std::uint64_t seed) {
  if (samples < 1) throw UsageError("check_cocoercivity needs at least one sample");
  require_metric_dim(c.dim(), m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    Vector v(c.dim());
    for (auto& e : v) e = normal(rng);
    return v;
  };
  CocoercivityReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Vector x = draw();
    Vector y = draw();
    const Vector dc = c.eval(x) - c.eval(y);
    const double slack = c.beta() * dc.dot(x - y) - norm_m_inv_squared(m, dc);
    if (slack < report.min_slack) {
      report.min_slack = slack;
      report.witness_x = std::move(x);
      report.witness_y = std::move(y);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

void ProblemInstance::validate(double probe_gamma) const {
  if (!a || !c) throw UsageError("problem needs both A and C");
  const int d = metric.dim();
  if (a->dim() != d || c->dim() != d) {
    throw UsageError("problem dimensions disagree: A=" + std::to_string(a->dim()) +
                     " C=" + std::to_string(c->dim()) + " M=" + std::to_string(d));
  }
  if (solution) {
    require_dim(d, *solution, "solution");
    require_finite(*solution, "solution");
    const Vector p = forward_backward(*this, probe_gamma, *solution);
    const double gap = (p - *solution).norm();
    if (gap > 1e-9) {
      throw UsageError("declared solution is not a fixed point of the FB map (gap " +
                       std::to_string(gap) + ")");
    }
  }
}

Vector forward_backward(const ProblemInstance& problem, double gamma, const Vector& y) {
  Vector rhs = problem.metric.apply(y);
  rhs.noalias() -= gamma * problem.c->eval(y);
  return problem.a->resolvent(problem.metric, gamma, rhs);
}

ForwardBackwardMap::ForwardBackwardMap(const ProblemInstance& problem, double gamma)
    : problem_(&problem), gamma_(gamma) {
  require_gamma(gamma);
  const bool linear_a = dynamic_cast<const LinearMonotoneOp*>(problem.a.get()) != nullptr ||
                        dynamic_cast<const ZeroMonotoneOp*>(problem.a.get()) != nullptr;
  const auto* quad = dynamic_cast<const QuadGradOp*>(problem.c.get());
  const bool affine_c =
      quad != nullptr || dynamic_cast<const ZeroCocoerciveOp*>(problem.c.get()) != nullptr;
  if (!linear_a || !affine_c) return;

  const int d = problem.dim();
  Matrix forward = problem.metric.matrix();
  Vector offset = Vector::Zero(d);
  if (quad) {
    forward -= gamma * quad->matrix();
    offset = -gamma * quad->offset();
  }
  t_.resize(d, d);
  for (int j = 0; j < d; ++j) {
    t_.col(j) = problem.a->resolvent(problem.metric, gamma, forward.col(j));
  }
  shift_ = problem.a->resolvent(problem.metric, gamma, offset);
  affine_ = true;
}

void ForwardBackwardMap::apply(const Vector& y, Vector& out) const {
  if (affine_) {
    require_dim(static_cast<int>(t_.cols()), y, "FB map argument");
    out.noalias() = t_ * y;
    out += shift_;
    return;
  }
  out = forward_backward(*problem_, gamma_, y);
}

Vector ForwardBackwardMap::operator()(const Vector& y) const {
  Vector out(y.size());
  apply(y, out);
  return out;
}

}  // namespace devsplit
