#pragma once

#include <iosfwd>

namespace vimar {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// The `vimar` command line. Subcommands: gen, calibrate, train, decode,
// eval, bench. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vimar
