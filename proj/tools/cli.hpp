#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msim::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kTolerance = 2, kDivergence = 3, kIo = 4 };

/// Runs one command line (without the program name) and returns its exit
/// code. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msim::cli
