#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rmtfolio::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalError = 3,
};

/// Parses argv, runs one subcommand and maps failures onto ExitCode.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rmtfolio::cli
