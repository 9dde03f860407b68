#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tqd::cli {

inline constexpr const char* version = "0.1.0";

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_input = 3;
inline constexpr int exit_model = 4;

// Runs one command line (without the program name). Results go to `out`
// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tqd::cli
