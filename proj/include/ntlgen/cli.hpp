#pragma once

#include <iosfwd>

namespace ntlgen::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDomainError = 1;  // data, format, IO, divergence
inline constexpr int kUsageError = 2;   // bad arguments or configuration

// Parses argv[1..] and runs one subcommand. Progress and the resolved
// configuration go to `err`; results and help text go to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ntlgen::cli
