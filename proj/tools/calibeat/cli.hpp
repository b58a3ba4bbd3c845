#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace calibeat::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kParse = 2;
inline constexpr int kValidation = 3;
inline constexpr int kConfig = 4;

// Runs one command line (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace calibeat::cli
