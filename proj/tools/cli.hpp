#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace btcreid::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 success, 1 data error, 2 usage error.
enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2 };

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace btcreid::cli
