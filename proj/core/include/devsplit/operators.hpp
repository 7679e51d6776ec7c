#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "devsplit/metric.hpp"

namespace devsplit {

/// Maximally monotone operator A, accessed through its M-resolvent.
///
/// resolvent(M, gamma, r) returns the unique p with M p + gamma a = r for
/// some a in A p, i.e. p = (M + gamma A)^{-1} r.
class MonotoneOp {
 public:
  virtual ~MonotoneOp() = default;

  virtual int dim() const = 0;
  virtual Vector resolvent(const Metric& m, double gamma, const Vector& r) const = 0;
  virtual std::string kind() const = 0;
  virtual bool is_zero() const { return false; }
};

/// Single-valued (1/beta)-cocoercive operator C with the declared constant.
class CocoerciveOp {
 public:
  virtual ~CocoerciveOp() = default;

  virtual int dim() const = 0;
  virtual Vector eval(const Vector& x) const = 0;
  virtual double beta() const = 0;
  virtual std::string kind() const = 0;
};

using MonotoneOpPtr = std::shared_ptr<const MonotoneOp>;
using CocoerciveOpPtr = std::shared_ptr<const CocoerciveOp>;

// A x = G x for a square G with G + G^T positive semidefinite.
class LinearMonotoneOp final : public MonotoneOp {
 public:
  explicit LinearMonotoneOp(Matrix g);

  int dim() const override { return static_cast<int>(g_.rows()); }
  Vector resolvent(const Metric& m, double gamma, const Vector& r) const override;
  std::string kind() const override { return "linear"; }
  bool is_zero() const override { return g_.isZero(0.0); }

  const Matrix& matrix() const noexcept { return g_; }
  Vector apply(const Vector& x) const { return g_ * x; }

  // Number of cached (M, gamma) factorizations; exposed for tests.
  std::size_t cached_factorizations() const;

 private:
  struct Factorization {
    double gamma;
    Matrix metric;
    Eigen::PartialPivLU<Matrix> lu;
  };
  const Factorization& factorization(const Metric& m, double gamma) const;

  Matrix g_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::vector<std::unique_ptr<Factorization>> cache_;
};

class ZeroMonotoneOp final : public MonotoneOp {
 public:
  explicit ZeroMonotoneOp(int dim);

  int dim() const override { return dim_; }
  Vector resolvent(const Metric& m, double gamma, const Vector& r) const override;
  std::string kind() const override { return "zero"; }
  bool is_zero() const override { return true; }

 private:
  int dim_;
};

// Normal cone of the box [lo, hi]. Its resolvent is a projection, which
// separates per coordinate only for diagonal metrics; other metrics are
// rejected.
class BoxNormalConeOp final : public MonotoneOp {
 public:
  BoxNormalConeOp(Vector lo, Vector hi);

  int dim() const override { return static_cast<int>(lo_.size()); }
  Vector resolvent(const Metric& m, double gamma, const Vector& r) const override;
  std::string kind() const override { return "box"; }

  const Vector& lower() const noexcept { return lo_; }
  const Vector& upper() const noexcept { return hi_; }

 private:
  Vector lo_;
  Vector hi_;
};

// C x = 0 with a user-declared beta (0 by default).
class ZeroCocoerciveOp final : public CocoerciveOp {
 public:
  explicit ZeroCocoerciveOp(int dim, double beta = 0.0);

  int dim() const override { return dim_; }
  Vector eval(const Vector& x) const override;
  double beta() const override { return beta_; }
  std::string kind() const override { return "zero"; }

 private:
  int dim_;
  double beta_;
};

// C x = Q x + q, the gradient of 0.5 x^T Q x + q^T x for symmetric PSD Q.
class QuadGradOp final : public CocoerciveOp {
 public:
  QuadGradOp(Matrix q_mat, Vector q_vec, double beta);

  int dim() const override { return static_cast<int>(q_.rows()); }
  Vector eval(const Vector& x) const override;
  double beta() const override { return beta_; }
  std::string kind() const override { return "quad_grad"; }

  const Matrix& matrix() const noexcept { return q_; }
  const Vector& offset() const noexcept { return offset_; }

 private:
  Matrix q_;
  Vector offset_;
  double beta_;
};

/// Builds a linear monotone operator, rejecting G whose symmetric part has an
/// eigenvalue below -1e-10.
MonotoneOpPtr make_linear_monotone(const Matrix& g);
MonotoneOpPtr make_zero_monotone(int dim);
MonotoneOpPtr make_box(const Vector& lo, const Vector& hi);
CocoerciveOpPtr make_zero_cocoercive(int dim, double beta = 0.0);
CocoerciveOpPtr make_quad_grad(const Matrix& q_mat, const Vector& q_vec, double beta);

/// Smallest beta for which C x = Q x + q is (1/beta)-cocoercive w.r.t. M:
/// the largest eigenvalue of M^{-1/2} Q M^{-1/2}.
double cocoercivity_constant(const Matrix& q_mat, const Metric& m);

Vector resolvent(const MonotoneOp& a, const Metric& m, double gamma, const Vector& r);
Vector eval_c(const CocoerciveOp& c, const Vector& x);

struct CocoercivityReport {
  // min over sampled pairs of beta <Cx - Cy, x - y> - ||Cx - Cy||^2_{M^{-1}}
  double min_slack = 0.0;
  Vector witness_x;
  Vector witness_y;
  bool certified(double tol = 1e-10) const { return min_slack >= -tol; }
};

/// Sampling certifier for the declared beta. Negative slack is a report
/// outcome, never an exception.
CocoercivityReport check_cocoercivity(const CocoerciveOp& c, const Metric& m, int samples,
                                      std::uint64_t seed);

struct ProblemInstance {
  MonotoneOpPtr a;
  CocoerciveOpPtr c;
  Metric metric;
  std::optional<Vector> solution;

  int dim() const { return metric.dim(); }
  double beta() const { return c->beta(); }

  // Checks dimensions agree and, when a solution is known, that it is a
  // fixed point of the FB map at `probe_gamma` (within 1e-9).
  void validate(double probe_gamma = 0.1) const;
};

/// p = (M + gamma A)^{-1}(M y - gamma C y).
Vector forward_backward(const ProblemInstance& problem, double gamma, const Vector& y);

/// The FB map y -> (M + gamma A)^{-1}(M y - gamma C y) for one fixed gamma.
///
/// When A is linear or zero and C is zero or an affine gradient, the map is
/// affine and is compiled once into p = T y + t; otherwise each call goes
/// through the operator oracles. The problem must outlive the map.
class ForwardBackwardMap {
 public:
  ForwardBackwardMap(const ProblemInstance& problem, double gamma);

  void apply(const Vector& y, Vector& out) const;
  Vector operator()(const Vector& y) const;

  bool affine() const noexcept { return affine_; }
  double gamma() const noexcept { return gamma_; }

 private:
  const ProblemInstance* problem_;
  double gamma_;
  bool affine_ = false;
  Matrix t_;
  Vector shift_;
};

}  // namespace devsplit
