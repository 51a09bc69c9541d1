#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace gne::cli {

enum ExitCode : int {
  ok = 0,
  config_error = 2,
  validation_error = 3,
  diverged = 4,
  oracle_failed = 5,
};

struct Command {
  std::string name;  // simulate | check | oracle | sweep
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string sweep_param;  // dotted key, e.g. rule.alpha
  std::string sweep_grid;   // comma-separated values
  unsigned workers = 0;     // 0 picks the hardware concurrency
};

/// Runs one command; progress goes to `out`, problems to `err`.
int run(const Command& cmd, std::ostream& out, std::ostream& err);

}  // namespace gne::cli
