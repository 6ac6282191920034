#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sitp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

// Entry point behind the `sitp` binary. `args` excludes the program name.
// Subcommands: run, compare, plot, gen-map, validate-config.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sitp
