#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cropspec {

// Full command-line front end, callable in-process for testing. args is the
// argv tail (no program name). Returns the process exit code: 0 success,
// 1 usage error, 2 data or schema error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cropspec
