#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cavity::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

/// Parses and runs one subcommand. Failures are reported on `err` as a single
/// JSON object {"error": {...}}; `out` receives help and short summaries.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cavity::cli
