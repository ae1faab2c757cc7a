#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace divforge {

// Runs one divforge command. `args` excludes the program name, e.g.
// {"build", "--corpus", "store", ...}. Returns the process exit code:
// 0 success, 1 I/O error, 2 precondition or usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

}  // namespace divforge
