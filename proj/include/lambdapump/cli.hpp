#pragma once

#include <iosfwd>

namespace lambdapump {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerification = 3;

/// Entry point of the `lambdapump` command line tool. Summaries go to `out`,
/// machine-readable error records to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lambdapump
