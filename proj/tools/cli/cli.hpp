#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hyperangle::cli {

// Exit codes: 0 success, 1 unexpected failure, 2 usage or invalid input,
// 3 resource limits, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace hyperangle::cli
