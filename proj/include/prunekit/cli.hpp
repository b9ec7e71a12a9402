#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prunekit {

// Runs the prunekit command line. `args` excludes the program name.
// Exit codes: 0 success, 1 I/O failure, 2 validation failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Formats a fraction as a one-decimal percentage, e.g. 0.38541 -> "38.5%".
std::string format_percent(double fraction);

}  // namespace prunekit
