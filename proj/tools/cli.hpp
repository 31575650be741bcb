#pragma once

#include <iosfwd>

namespace semmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerificationFailed = 2;

/// Entry point of the `semmap_cli` executable: simulate, benchmark, verify.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace semmap::cli
