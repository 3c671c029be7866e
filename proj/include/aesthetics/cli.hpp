#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aesthetics::cli {

// args[0] is the program name. Returns 0 on success, 1 for usage errors,
// 2 for data errors and 3 for runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aesthetics::cli
