#pragma once

#include <iosfwd>

namespace hybridssr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/*
 * Entry point of the `hybridssr` tool. Subcommands: simulate, ssr, test,
 * weights, summarize, plan. Errors go to `err` as `E:<exit code>:<message>`.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace hybridssr
