#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace cemfd {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitSolver = 2,
  kExitCheckFailed = 3,
};

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

// Each command writes its tables into options.out and reports problems on
// standard error; the return value is one of ExitCode.
int cmd_forward(const CommandOptions& options);
int cmd_invert(const CommandOptions& options);
int cmd_study(const CommandOptions& options);
// which: energy, steklov, pmap or gradient.
int cmd_check(const CommandOptions& options, const std::string& which);

}  // namespace cemfd
