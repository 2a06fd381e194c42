#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace llmguard {

// Exit codes shared by every subcommand; scan additionally returns
// kExitFlagged when any detector flags.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFlagged = 2;

// Entry point behind the llmguard binary. args[0] is the program name.
// Machine-readable output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace llmguard
