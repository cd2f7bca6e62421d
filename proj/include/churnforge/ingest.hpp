#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "churnforge/error.hpp"
#include "churnforge/records.hpp"

namespace churnforge {

enum class CdrFormat { Csv, JsonLines };

inline constexpr std::string_view kCdrCsvHeader =
    "timestamp,caller,callee,event_kind,duration_s,bytes_up,bytes_down,rat,dropped,cell_id";

struct ParseOptions {
  /// Strict mode turns the first malformed row into a thrown ParseError.
  bool strict = false;
};

struct ParseIssue {
  std::size_t line = 0;
  ErrorCode code = ErrorCode::Parse;
  std::string message;
};

template <typename T>
struct ParseResult {
  std::vector<T> items;
  std::vector<ParseIssue> issues;
};

/// Pull-style reader over a CDR file; yields records in file order.
class CdrReader {
 public:
  CdrReader(std::istream& in, CdrFormat format, ParseOptions options = {});

  /// Next valid record, or nullopt at end of input. Malformed rows are
  /// recorded in issues() (lenient) or thrown (strict).
  std::optional<CdrRecord> next();

  const std::vector<ParseIssue>& issues() const noexcept { return issues_; }

 private:
  std::istream& in_;
  CdrFormat format_;
  ParseOptions options_;
  std::size_t line_no_ = 0;
  bool header_checked_ = false;
  std::vector<ParseIssue> issues_;
};

ParseResult<CdrRecord> parse_cdr_stream(std::istream& in, CdrFormat format, ParseOptions options = {});
ParseResult<CdrRecord> parse_cdr_file(const std::filesystem::path& path, CdrFormat format,
                                      ParseOptions options = {});

/// Single-row codecs. The parsers throw ParseError with line 0.
CdrRecord parse_cdr_csv_row(std::string_view row);
std::string format_cdr_csv_row(const CdrRecord& record);
CdrRecord parse_cdr_json_row(std::string_view row);
std::string format_cdr_json_row(const CdrRecord& record);

void write_cdr(std::ostream& out, std::span<const CdrRecord> records, CdrFormat format);

/// Profile CSV: `id,activation_date,birth_year,<attribute columns...>`.
/// Duplicate ids always throw Error(DuplicateIdentity).
ParseResult<CustomerProfile> parse_profiles(std::istream& in, ParseOptions options = {});
ParseResult<CustomerProfile> parse_profiles(const std::filesystem::path& path, ParseOptions options = {});
void write_profiles(std::ostream& out, std::span<const CustomerProfile> profiles);

/// Label CSV: `id,label`. Duplicate ids always throw Error(DuplicateIdentity).
ParseResult<LabelRecord> parse_labels(std::istream& in, ParseOptions options = {});
ParseResult<LabelRecord> parse_labels(const std::filesystem::path& path, ParseOptions options = {});
void write_labels(std::ostream& out, std::span<const LabelRecord> labels);

CdrFormat parse_cdr_format(std::string_view token);

}  // namespace churnforge
