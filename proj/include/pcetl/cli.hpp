#pragma once

#include <string>
#include <vector>

namespace pcetl {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitNumeric = 1, kExitUsage = 2 };

/// Entry point of the `pcetl` tool. Logs go to stderr; results go to files
/// under --out.
int run_cli(int argc, const char* const* argv);
/// Same, with argv[0] supplied internally.
int run_cli(const std::vector<std::string>& args);

}  // namespace pcetl
