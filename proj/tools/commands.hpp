#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace foagp::cli {

/// Runs the command line. Returns the process exit code: 0 success, 1 compute failure,
/// 2 input error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the program name prepended.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace foagp::cli
