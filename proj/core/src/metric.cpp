#include "devsplit/metric.hpp"

#include <cmath>
#include <string>

#include "devsplit/errors.hpp"

namespace devsplit {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kRadicandTol = 1e-14;

void require_dim(const Metric& m, const Vector& a) {
  if (a.size() != m.dim()) {
    throw UsageError("vector of dimension " + std::to_string(a.size()) +
                     " used with metric of dimension " + std::to_string(m.dim()));
  }
}

double checked_sqrt(double radicand) {
  if (radicand < -kRadicandTol) {
    throw MetricError("negative squared norm " + std::to_string(radicand) +
                      "; metric is not positive definite");
  }
  return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) {
    throw UsageError(std::string(what) + " has non-finite entries");
  }
}

void require_same_dim(const Vector& a, const Vector& b, std::string_view what) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

Metric::Metric(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw MetricError("metric must be a non-empty square matrix");
  }
  if (!m_.allFinite()) {
    throw MetricError("metric has non-finite entries");
  }
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw MetricError("metric is not symmetric");
  }
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success) {
    throw MetricError("metric is not positive definite (Cholesky failed)");
  }
  identity_ = m_.isIdentity(0.0);
  diagonal_ = m_.isDiagonal(0.0);
}

Metric Metric::identity(int dim) {
  if (dim <= 0) throw UsageError("metric dimension must be positive");
  return Metric(Matrix::Identity(dim, dim));
}

Metric Metric::diagonal(const Vector& d) { return Metric(Matrix(d.asDiagonal())); }

Vector Metric::apply(const Vector& v) const {
  require_dim(*this, v);
  if (identity_) return v;
  if (diagonal_) return m_.diagonal().cwiseProduct(v);
  return m_ * v;
}

Vector Metric::apply_inverse(const Vector& v) const {
  require_dim(*this, v);
  if (identity_) return v;
  if (diagonal_) return v.cwiseQuotient(m_.diagonal());
  return llt_.solve(v);
}

double inner_m(const Metric& m, const Vector& a, const Vector& b) {
  require_dim(m, a);
  require_dim(m, b);
  if (m.is_identity()) return a.dot(b);
  return a.dot(m.apply(b));
}

double norm_m_squared(const Metric& m, const Vector& a) { return inner_m(m, a, a); }

double norm_m(const Metric& m, const Vector& a) { return checked_sqrt(norm_m_squared(m, a)); }

double norm_m_inv_squared(const Metric& m, const Vector& a) {
  require_dim(m, a);
  if (m.is_identity()) return a.squaredNorm();
  return a.dot(m.apply_inverse(a));
}

double norm_m_inv(const Metric& m, const Vector& a) {
  return checked_sqrt(norm_m_inv_squared(m, a));
}

}  // namespace devsplit
