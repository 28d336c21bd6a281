#ifndef SYNTHDSE_TOOLS_CLI_APP_HPP
#define SYNTHDSE_TOOLS_CLI_APP_HPP

#include <ostream>
#include <string>
#include <vector>

namespace synthdse::cli {

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace synthdse::cli

#endif
