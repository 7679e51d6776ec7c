#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace devsplit::bench {

struct VerifyCheck {
  std::string name;
  // Worst observed value, already normalized the way `tolerance` expects.
  double worst = 0.0;
  double tolerance = 0.0;
  // true: worst must be <= tolerance; false: worst must be >= -tolerance.
  bool upper = true;
  bool passed = true;
};

struct VerifyReport {
  std::string suite;
  int trials = 0;
  std::vector<VerifyCheck> checks;
  // Reported, never asserted.
  std::vector<std::string> notes;

  bool ok() const;
};

/// Suites: "lyapunov" (identity, descent and nonnegativity along random runs
/// with clipped random deviations), "identities" (parameter identities and
/// the three ell-argument forms on random draws), "rates" (residual rate
/// envelopes of the tunable and anchored variants). dim = 0 draws [2, 8].
VerifyReport verify_suite(const std::string& suite, int trials, std::uint64_t seed, int dim = 0,
                          int steps = 200);

}  // namespace devsplit::bench
