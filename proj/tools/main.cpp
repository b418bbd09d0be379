// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mixlaw/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::map<std::string, std::string> env;
  if (const char* config = std::getenv("MIXLAW_CONFIG")) env["MIXLAW_CONFIG"] = config;
  const mixlaw::cli::CommandOutcome outcome = mixlaw::cli::run(args, env);
  if (!outcome.summary.empty()) {
    (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.summary << "\n";
  }
  return outcome.exit_code;
}
