#include "flowmatch/error.hpp"

namespace flowmatch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnbalancedInjections: return "UnbalancedInjections";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ZeroCapacity: return "ZeroCapacity";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingTopology: return "MissingTopology";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::ZeroDemand: return "ZeroDemand";
    case ErrorCode::MissingReference: return "MissingReference";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message, int line) {
  std::string out(to_string(code));
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, int line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace flowmatch
