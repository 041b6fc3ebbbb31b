#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "edgemlp/error.hpp"

namespace edgemlp::cli {

// Stable for scripting.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int exit_code_for(ErrorCode code) noexcept;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Convenience for tests: args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgemlp::cli
