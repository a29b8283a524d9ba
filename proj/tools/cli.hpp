#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tucker::cli {

/// Runs one command given argv-style arguments (without the program name).
/// Exit codes: 0 success, 1 validation, 2 numerical failure, 3 I/O.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tucker::cli
