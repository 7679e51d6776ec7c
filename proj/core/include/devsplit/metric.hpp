#pragma once

#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace devsplit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Throws UsageError if any entry of `v` is NaN or infinite.
void require_finite(const Vector& v, std::string_view what);
void require_same_dim(const Vector& a, const Vector& b, std::string_view what);

/// Symmetric positive definite operator M defining <a, b>_M = <a, M b>.
///
/// Stored densely together with its Cholesky factor. Validation (symmetry
/// residual <= 1e-10 relative, successful factorization) happens once in the
/// constructor; afterwards the object is immutable and may be shared freely
/// between threads.
class Metric {
 public:
  explicit Metric(Matrix m);

  static Metric identity(int dim);
  static Metric diagonal(const Vector& d);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  bool is_identity() const noexcept { return identity_; }
  bool is_diagonal() const noexcept { return diagonal_; }

  Vector apply(const Vector& v) const;
  Vector apply_inverse(const Vector& v) const;

  bool operator==(const Metric& other) const { return m_ == other.m_; }

 private:
  Matrix m_;
  Eigen::LLT<Matrix> llt_;
  bool identity_ = false;
  bool diagonal_ = false;
};

/// <a, M b>.
double inner_m(const Metric& m, const Vector& a, const Vector& b);
/// sqrt(<a, M a>); throws MetricError when the radicand is below -1e-14.
double norm_m(const Metric& m, const Vector& a);
double norm_m_squared(const Metric& m, const Vector& a);
/// sqrt(<a, M^{-1} a>), the dual norm.
double norm_m_inv(const Metric& m, const Vector& a);
double norm_m_inv_squared(const Metric& m, const Vector& a);

}  // namespace devsplit
