#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace kis::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumeric = 3,
    kExitIo = 4,
};

/// Subcommand names in the order they appear in --help.
const std::vector<std::string>& command_names();

/// Runs one subcommand against a populated config, writing its report to `out`.
/// Returns the exit code; config, numeric and IO failures surface as exceptions
/// except for trajectory overflow, which writes a failure marker and returns
/// kExitNumeric.
int run_command(const std::string& name, Config& cfg, std::ostream& out);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kis::cli
