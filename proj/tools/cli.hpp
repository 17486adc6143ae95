#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l2net::cli {

inline constexpr const char *kVersion = "0.1.0";

/// Runs one command line (args[0] is the program name). The one-line JSON
/// summary, or an error object, goes to `out`; help text and usage
/// diagnostics go to `err`. Returns the process exit code.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace l2net::cli
