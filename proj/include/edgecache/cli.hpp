#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgecache {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

// Subcommands: run, compare, sweep, validate, emit-plot-data. `args` excludes
// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgecache
