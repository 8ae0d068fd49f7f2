#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ktan/solver.hpp"

namespace ktan::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kUsageError = 1, kRuntimeError = 2 };

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline constexpr const char* kTraceHeader =
    "stage,attempt,n,samples_cum,grad_evals_cum,wall_ms,grad_norm,k,epsilon,alpha_used,rho_used,subopt";

/// Writes a trace in the CSV schema above; `solver`, when non-empty, is
/// prepended as an extra first column (long format for merged files).
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, const std::string& solver = {},
                     bool header = true);

/// Reads `key = value` lines (`#` comments) into pairs, in file order.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

}  // namespace ktan::cli
