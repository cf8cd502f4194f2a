#pragma once

#include <exception>

namespace projner::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kMissingInput = 2;
inline constexpr int kInvalidConfig = 3;
inline constexpr int kInternal = 4;

int exit_code_for(const std::exception& e);

// Parses arguments, runs the subcommand and maps errors to exit codes.
// Diagnostics go to stderr.
int run(int argc, const char* const* argv);

}  // namespace projner::cli
