#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optospring {

/// Exit codes shared by all subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitUnstable = 3,
    kExitNumerical = 4,
};

/// Runs one CLI invocation. `args` excludes the program name. Reports go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace optospring
