#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace percept
{
struct RunOptions
{
  std::string scenario;
  std::optional<uint64_t> seed;
  std::optional<int64_t> budget;
  std::optional<double> epsilon;
  std::string out_dir = ".";
  // 0: trace and report; 1: plus candidates and plans; 2: plus per-step net
  // snapshots.
  int trace_level = 1;
};

/// Entry point of the percept tool. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace percept
