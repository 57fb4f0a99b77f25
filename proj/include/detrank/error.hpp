#pragma once

#include <stdexcept>
#include <string>

namespace detrank {

/// Process exit codes shared by every CLI subcommand.
enum class ExitCode : int {
  success = 0,
  usage = 1,
  io_or_format = 2,
  not_applicable = 3,
  numerical = 4,
};

/// Root of the library's exception hierarchy. Every error carries the exit
/// code the CLI maps it to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what, ExitCode::usage) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, ExitCode::io_or_format) {}
};

/// Bad magic, unsupported version, truncated header, malformed CSV.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what, ExitCode::io_or_format) {}
};

/// Checksum mismatch between stored and recomputed CRC.
class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what) : Error(what, ExitCode::io_or_format) {}
};

/// A structurally readable input that violates a domain invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what, ExitCode::io_or_format) {}
};

class NotApplicableError : public Error {
 public:
  explicit NotApplicableError(const std::string& what) : Error(what, ExitCode::not_applicable) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, ExitCode::numerical) {}
};

}  // namespace detrank
