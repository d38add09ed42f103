#pragma once

#include <stdexcept>
#include <string>

namespace entrain {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kConfig = 2,
  kData = 3,
  kInvariant = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid options or run configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// A postcondition the library itself should have guaranteed was broken.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ExitCode::kInvariant, what) {}
};

}  // namespace entrain
