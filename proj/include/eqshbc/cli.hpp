#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

namespace eqshbc {

inline constexpr std::string_view kVersion = "0.1.0";

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolve = 3,
  kExitIo = 4,
  kExitMissingArtifact = 5,
  kExitGridMismatch = 6,
  kExitParse = 7,
  kExitNoOverlap = 8,
};

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

std::string sha256_hex(std::string_view data);

} // namespace eqshbc
