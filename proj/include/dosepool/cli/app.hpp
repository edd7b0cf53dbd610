#pragma once

// Command-line front end: fit, compare and simulate subcommands.

#include <iosfwd>

namespace dosepool::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

/// Runs the tool with the given arguments (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dosepool::cli
