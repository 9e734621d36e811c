#pragma once

#include <iosfwd>

namespace smartstat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // usage and input validation errors
inline constexpr int kExitRuntime = 2;  // IO, provider and numerical failures

/// Runs the `smartstat` command line. Results go to `out`, diagnostics to
/// `err`; the return value is the process exit code.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace smartstat::cli
