#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace strb {

// Entry point shared by the binary and the tests.  Returns the process exit
// code: 0 ok, 2 configuration error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace strb
