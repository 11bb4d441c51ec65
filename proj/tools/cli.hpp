#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dfsq::cli {

// Exit codes: 0 success, 1 unexpected failure, 2 bad flags or inputs,
// 3 numerical non-convergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace dfsq::cli
