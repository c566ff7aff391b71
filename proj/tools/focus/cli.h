#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace focus::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kIncomplete = 1;  // some instance or step failed
inline constexpr int kUsage = 2;       // bad flags, config or input files

// Entry point of the `focus` tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace focus::cli
