#include "churnforge/error.hpp"

namespace churnforge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::UnknownEventKind: return "UnknownEventKind";
    case ErrorCode::NegativeQuantity: return "NegativeQuantity";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::DuplicateIdentity: return "DuplicateIdentity";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SchemaCollision: return "SchemaCollision";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::Validation: return "Validation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(ErrorCode code, std::size_t line, const std::string& message)
    : Error(code, line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

}  // namespace churnforge
