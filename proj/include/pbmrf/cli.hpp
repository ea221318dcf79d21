#pragma once

// Command-line front end. The pbmrf tool is a thin wrapper around run_cli so
// the same code paths can be driven in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace pbmrf {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitResource = 3,
};

/// args excludes the program name. Results go to `out` unless --out is given;
/// diagnostics and command summaries go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbmrf
