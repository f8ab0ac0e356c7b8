#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tablehop {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitBackend = 3,
};

/// Entry point of the `tablehop` tool. args[0] is the program name. Results go
/// to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

}  // namespace tablehop
