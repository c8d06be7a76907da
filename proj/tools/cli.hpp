#pragma once

#include <string>
#include <vector>

namespace maxgrad::cli {

// Parses argv-style arguments (without the program name), dispatches to the
// requested subcommand, and writes its outputs. Returns the process exit
// status: 0 on success with all asserted checks passing, 1 on a check
// failure or runtime error, 2 on a configuration error.
int run(const std::vector<std::string>& args);

}  // namespace maxgrad::cli
