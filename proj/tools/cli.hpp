#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpvar::cli {

/// Process exit codes; stable across releases.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kModelFailure = 4,
  kDataContract = 5,
};

/// Runs the command line `argv[0] <subcommand> ...` and returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload used by tests: `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);
[[nodiscard]] std::string sha256_text(const std::string& text);

}  // namespace mpvar::cli
