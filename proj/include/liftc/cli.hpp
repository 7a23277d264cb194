#pragma once

#include <string>
#include <vector>

namespace liftc {

// Exit codes: 0 success, 1 validation failure, 2 I/O, 3 numeric failure.
int run_cli(const std::vector<std::string>& args);

} // namespace liftc
