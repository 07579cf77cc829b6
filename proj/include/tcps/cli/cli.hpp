#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tcps::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitQosFail = 1,  // verdict fail, no completed transactions, or a failed sweep cell
  kExitUsage = 2,    // bad flags or invalid configuration
  kExitCalibration = 3,
};

/// Entry point shared by the tcps-sim binary and the tests. `args` excludes
/// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tcps::cli
