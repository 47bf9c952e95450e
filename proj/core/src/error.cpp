#include "hforge/error.hpp"

namespace hforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::TooFewRays: return "TooFewRays";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::AllViewsFailed: return "AllViewsFailed";
    case ErrorCode::Spawn: return "SpawnError";
    case ErrorCode::Protocol: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::AboveHorizon: return "AboveHorizon";
    case ErrorCode::NoValidRegion: return "NoValidRegion";
    case ErrorCode::EmptyModelPool: return "EmptyModelPool";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace hforge
