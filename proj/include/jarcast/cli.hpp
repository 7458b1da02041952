#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jarcast {

// Entry point of the `jarcast` tool. `args` excludes the program name.
// Returns the process exit code; failures print one "error: ..." line to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jarcast
