#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cikf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `cikf` subcommand. `args` excludes the program name. Errors are
/// reported on `err` as a single line "error: <kind>: <message>".
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace cikf
