#pragma once

#include <string>
#include <vector>

namespace symkit {

// Full command-line entry point, callable in-process. args excludes the
// program name. Returns the process exit code: 0 success, 1 usage error,
// 2 data error.
int run_cli(const std::vector<std::string>& args);

}  // namespace symkit
