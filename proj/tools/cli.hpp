#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prdesc {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

/// Runs one `prdesc` invocation; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prdesc
