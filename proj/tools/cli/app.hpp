#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssidepth::cli {

enum ExitCode : int {
  ok = 0,
  config_error = 2,
  io_error = 3,
  parse_error = 4,
  numerical_error = 5,
};

// Runs the command line `args` (args[0] is the program name) and returns the
// process exit code. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssidepth::cli
