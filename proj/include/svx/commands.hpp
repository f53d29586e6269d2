#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "svx/config.hpp"

namespace svx {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNegative = 2;

struct CommandArgs {
  std::string snapshot;  // check: overrides check.snapshot
};

const std::vector<std::string>& command_names();

/// Runs one subcommand. Library errors are caught and mapped onto exit codes;
/// diagnostics go to err, a short human summary to out.
int run_command(const std::string& name, const RunConfig& cfg, const CommandArgs& args,
                std::ostream& out, std::ostream& err);

}  // namespace svx
