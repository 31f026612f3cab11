#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace airmc::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDivergence = 3;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

// Keeps glibc from returning every large temporary to the kernel. Training
// allocates several matrices of a few hundred KB per iteration; served by
// mmap, each one costs a round of page faults.
void tune_allocator();

}  // namespace airmc::cli
