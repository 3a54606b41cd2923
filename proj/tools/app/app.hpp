#pragma once

#include <ostream>

namespace dic::app {

inline constexpr const char* kToolVersion = "dic 1.0.0";

enum ExitCode : int {
    kOk = 0,
    kMissingFile = 1,
    kInfeasibleTargets = 2,
    kNotConverged = 3,
    kInvalidInput = 4,
};

/*! Entry point of the `dic` command-line tool. Commands: calibrate, price,
    deltas, quanto, oracle-check, example. Returns the process exit code.
*/
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace dic::app
