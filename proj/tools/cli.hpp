#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irf::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 on success, 1 on a runtime failure and 2 on a usage,
/// configuration or input error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irf::cli
