#pragma once

#include <string>
#include <vector>

namespace lfopt {

// Dispatches one CLI invocation (args exclude the program name).
// Exit codes: 0 success, 1 usage error (synopsis on stderr), 2 runtime error.
int run_command(const std::vector<std::string>& args);

} // namespace lfopt
