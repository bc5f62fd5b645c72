#pragma once

#include <ostream>

namespace cbs::cli {

inline constexpr const char* version = "0.1.0";

enum ExitCode : int { Ok = 0, ConfigFailure = 2, NumericalFailure = 3 };

/// Parses argv, runs one subcommand and writes its CSV or JSON either to
/// --out or to `out`. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbs::cli
