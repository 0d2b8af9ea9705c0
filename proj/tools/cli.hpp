#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dcms::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcms::cli
