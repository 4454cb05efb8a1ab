#pragma once

#include <string>
#include <vector>

namespace mfm {

// Runs one CLI invocation (args exclude the program name). Exit codes:
// 0 success, 2 usage/config, 3 I/O failure, 4 numeric failure, 1 other.
int dispatch(const std::vector<std::string>& args);

}  // namespace mfm
