#pragma once

#include <filesystem>
#include <string>

#include "plateflow/cli/config.hpp"

namespace plateflow::cli {

enum class Command { Solve, Verify, Refine, PenaltyStudy };

/// Accepts "solve", "verify", "refine", "penalty-study".
Command parse_command(const std::string& name);
std::string to_string(Command c);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failure = 1;
inline constexpr int usage_error = 2;
inline constexpr int solver_failure = 3;
}  // namespace exit_code

struct CommandOptions {
    std::filesystem::path out_dir;
    /// Also write wall-clock timings to timings.json. Off by default so that
    /// repeated runs leave byte-identical output directories.
    bool write_timings = false;
};

/**
 * Runs one command and writes its files under opts.out_dir:
 *   summary.json        config echo, per-step records, checks, errors
 *   steps.csv           per-step energy, dissipation and measure mass
 *   fields/u_<i>.csv    selected states
 *   checks.csv          verify (and solve with diagnostics on)
 *   refine.csv          refine: one row per resolution n, 2n, 4n, 8n
 *   penalty_study.csv   penalty-study: one row per eps for the first step
 * Returns an exit_code value; solver failures are recorded in summary.json.
 */
int run_command(Command cmd, const RunConfig& cfg, const CommandOptions& opts);

}  // namespace plateflow::cli
