// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

namespace mixlaw::cli {

/// Stable exit codes: 0 success, 2 usage error, 3 solver infeasibility,
/// 4 fit failure, 5 I/O or parse error, 1 anything else.
struct CommandOutcome {
  int exit_code = 0;
  std::vector<std::string> artifacts_written;
  std::string summary;
};

/// Executes one subcommand. args excludes the program name. The environment
/// map is consulted for MIXLAW_CONFIG (path of a JSON file presetting fit
/// options; explicit flags win). All file outputs are written atomically.
CommandOutcome run(const std::vector<std::string>& args,
                   const std::map<std::string, std::string>& env = {});

}  // namespace mixlaw::cli
