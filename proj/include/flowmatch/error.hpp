#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowmatch {

enum class ErrorCode {
  InvalidArgument,
  UnbalancedInjections,
  SingularSystem,
  ZeroCapacity,
  DimensionMismatch,
  MissingTopology,
  MalformedFile,
  ZeroDemand,
  MissingReference,
  EmptyInput,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a machine-readable code. Parse errors also carry the
/// 1-based line number of the offending input (0 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0);

  ErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace flowmatch
