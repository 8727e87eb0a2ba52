#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skipscope {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_input = 2,
    exit_verification = 3,
};

// Full command-line entry point. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace skipscope
