#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fovtopo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainFailure = 1;
inline constexpr int kExitUsage = 2;

enum class LogLevel { Quiet, Info, Debug };

/// Reads FOV_TOPO_LOG (quiet, info, debug); unset or unknown values mean info.
LogLevel log_level_from_env();

/// Parses and dispatches one command line. Machine-readable output goes to `out`, diagnostics
/// to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        LogLevel level = log_level_from_env());

}  // namespace fovtopo::cli
