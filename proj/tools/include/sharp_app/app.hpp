#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sharp::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one command line (without the program name). Errors are reported on
/// `err` and mapped to exit codes: 2 for usage and validation errors, 3 for
/// numerical failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sharp::app
