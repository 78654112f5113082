#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace parceldelin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one `parceldelin <subcommand> ...` invocation. `args` excludes the
// program name. Results go to `out`, diagnostics to `err`; progress is
// logged through spdlog (level from PARCELDELIN_LOG).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace parceldelin::cli
