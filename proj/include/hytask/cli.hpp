#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hytask {

inline constexpr const char *kVersion = "0.1.0";

/// Runs one command line (without the program name). Failures print a JSON error
/// object to `err` and return nonzero: 2 for usage errors, 1 otherwise.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace hytask
