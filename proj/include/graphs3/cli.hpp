#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace graphs3 {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEmpty = 3;
inline constexpr int kExitIo = 4;

// argv[0] excluded. Output files go under <out>/<run-id>/.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graphs3
