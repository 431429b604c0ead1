#pragma once

namespace pointing::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kEmptyResult = 3;
inline constexpr int kNumericalFailure = 4;

/// Runs the full command-line application (subcommands: ingest, fit,
/// simulate, compare, report). Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace pointing::cli
