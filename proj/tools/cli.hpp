#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace isobench::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kNumerical = 2,
};

/// Runs one subcommand. `args` excludes the program name. A one-line JSON
/// summary goes to `out`; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count from ISOBENCH_WORKERS, or 1 when unset or malformed.
unsigned default_workers();

}  // namespace isobench::cli
