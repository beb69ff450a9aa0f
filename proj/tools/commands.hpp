#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace graphrank::cli {

enum ExitCode : int {
  kSuccess = 0,
  kDataError = 2,
  kIdentifiabilityError = 3,
  kConfigError = 4,
};

/// Runs the graph_rank command line with `args` (without the program name).
/// Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graphrank::cli
