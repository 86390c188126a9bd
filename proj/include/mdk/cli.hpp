#pragma once

#include <string>
#include <vector>

namespace mdk {

// Entry point behind the mdk binary; args exclude the program name.
// Exit codes: 0 success, 2 configuration error, 3 runtime abort.
int cli_run(std::vector<std::string> args);

}  // namespace mdk
