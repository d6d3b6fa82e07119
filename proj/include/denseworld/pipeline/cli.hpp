// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace denseworld::pipeline {

enum ExitCode : int {
  kExitOk = 0,
  kExitPartial = 1,
  kExitUsage = 2,
  kExitConfig = 3,
};

// The denseworld command line. args[0] is the program name.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace denseworld::pipeline
