#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cch {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// The full acceptance suite, run in order. Each check is self-contained
/// and uses fixed seeds; results are deterministic on a given build.
/// Progress lines are written to `progress` as checks finish (may be null).
std::vector<CheckResult> run_acceptance_checks(std::ostream* progress);

/// The subset behind `cch validate`: Monte-Carlo-vs-asymptotics agreement,
/// the benefit-criterion grid, and the optimal-teacher identities. `quick`
/// trims seed counts to keep the run under a minute.
std::vector<CheckResult> run_validation_checks(bool quick, std::ostream* progress);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace cch
