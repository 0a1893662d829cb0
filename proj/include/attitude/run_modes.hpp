#pragma once

// Mode dispatch, the verify identity suite, and the run manifest.

#include <iosfwd>

#include "attitude/config.hpp"

namespace attitude::cli {

inline constexpr const char* kVersion = "attitude-hydro 1.0.0";

/// Exit codes: 0 success, 2 config error, 3 numerical-invariant failure,
/// 4 solver abort.
int dispatch(const RunConfig& cfg, std::ostream& log);

struct VerifyResult {
  bool all_passed = false;
  int failures = 0;
};

/// Identity suite (projection, consistency, linearization, dissipation, GCI
/// orthogonality, matrix symmetry); prints a pass/fail table.
VerifyResult run_verify(const RunConfig& cfg, std::ostream& log);

}  // namespace attitude::cli
