#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace defilab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAnalysis = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCap = 3;

/// JSON report schema version.
inline constexpr int kSchemaVersion = 1;

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace defilab::cli
