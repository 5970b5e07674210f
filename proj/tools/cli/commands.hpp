#pragma once

// Subcommands of the rsched tool.

#include <iosfwd>
#include <string>

#include "rsched/policy.hpp"

namespace rsched::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,        ///< bad arguments, config, or input files
  kExitInfeasible = 2,   ///< parameters fail the feasibility recursion
  kExitBudget = 3,       ///< oracle enumeration budget exceeded
  kExitCheckFailed = 4,  ///< a verification check reported FAIL
};

/// Runs the tool; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Reads a schedule in the thresholds.csv layout ("stage,c,threshold";
/// '#' lines skipped; "inf" allowed). Every stage 0..horizon and both
/// channel states must appear exactly once. Throws ConfigError.
ThresholdSchedule read_threshold_file(const std::string& path, int horizon);

}  // namespace rsched::cli
