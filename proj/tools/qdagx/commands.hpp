#pragma once

#include <string>
#include <vector>

namespace qdagx {

/// Parses and runs one subcommand line (without the program name). Errors are
/// reported as JSON on stderr; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace qdagx
