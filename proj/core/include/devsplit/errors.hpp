#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace devsplit {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed in malformed input: dimension mismatch, bad ranges, NaN entries.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A matrix claimed to be a metric is not symmetric positive definite.
class MetricError : public Error {
 public:
  using Error::Error;
};

// An operator violates its declared contract (e.g. monotonicity).
class OperatorContractError : public Error {
 public:
  using Error::Error;
};

// A schedule or run configuration fails validation. `items` lists each
// violated assumption item in human-readable form.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::vector<std::string> items = {})
      : Error(what), items_(std::move(items)) {}
  const std::vector<std::string>& items() const noexcept { return items_; }

 private:
  std::vector<std::string> items_;
};

// A deviation policy proposed (u, v) outside the safeguard ball.
class SafeguardViolation : public Error {
 public:
  SafeguardViolation(const std::string& what, double lhs, double budget)
      : Error(what), lhs_(lhs), budget_(budget) {}
  double lhs() const noexcept { return lhs_; }
  double budget() const noexcept { return budget_; }

 private:
  double lhs_;
  double budget_;
};

}  // namespace devsplit
