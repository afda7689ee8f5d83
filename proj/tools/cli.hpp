#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dissflow::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitUsage = 4;

inline constexpr const char* kReportSchema = "dissflow-report";
inline constexpr int kReportSchemaVersion = 1;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dissflow::cli
