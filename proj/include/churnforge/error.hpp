#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace churnforge {

enum class ErrorCode {
  Io,
  Parse,
  UnknownEventKind,
  NegativeQuantity,
  BadTimestamp,
  DuplicateIdentity,
  InvalidArgument,
  SchemaCollision,
  SchemaMismatch,
  MissingLabel,
  MissingArtifact,
  Validation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Row-level failure while reading a delimited or JSON-lines file.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace churnforge
