#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hforge {

enum class ErrorCode {
  InvalidArgument,
  BehindCamera,
  TooFewRays,
  DegenerateConfiguration,
  Io,
  Parse,
  Validation,
  DegenerateMesh,
  AllViewsFailed,
  Spawn,
  Protocol,
  Timeout,
  AboveHorizon,
  NoValidRegion,
  EmptyModelPool,
  InvalidFraction,
  InvariantViolation,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hforge
