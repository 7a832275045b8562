#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bpr::cli {

/// Runs one command line (argv[0] excluded) and returns the process exit
/// code: 0 success, 2 I/O, 3 validation or shape, 4 numerical failure.
/// Failures print a single line `error: category=<c> message=<m>` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bpr::cli
