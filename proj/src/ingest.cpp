#include "churnforge/ingest.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "churnforge/util.hpp"

namespace churnforge {
namespace {

using nlohmann::json;

constexpr std::size_t kCdrFields = 10;

std::int64_t parse_quantity(std::string_view field, const char* name) {
  if (field.empty()) return 0;
  std::int64_t v = 0;
  if (!parse_int64(field, v)) throw ParseError(ErrorCode::Parse, 0, std::string("bad ") + name + " '" + std::string(field) + "'");
  if (v < 0) throw ParseError(ErrorCode::NegativeQuantity, 0, std::string("negative ") + name);
  return v;
}

bool parse_flag(std::string_view field) {
  if (field.empty() || field == "0" || field == "false") return false;
  if (field == "1" || field == "true") return true;
  throw ParseError(ErrorCode::Parse, 0, "bad dropped flag '" + std::string(field) + "'");
}

CustomerId parse_id(std::string_view field) {
  try {
    return CustomerId::parse(field);
  } catch (const Error& e) {
    throw ParseError(ErrorCode::Parse, 0, e.what());
  }
}

Instant parse_ts(std::string_view field) {
  try {
    return parse_instant(field);
  } catch (const Error& e) {
    throw ParseError(ErrorCode::BadTimestamp, 0, e.what());
  }
}

EventKind parse_kind(std::string_view field) {
  auto kind = parse_event_kind(field);
  if (!kind) throw ParseError(ErrorCode::UnknownEventKind, 0, "unknown event_kind '" + std::string(field) + "'");
  return *kind;
}

void check(const CdrRecord& r) {
  try {
    validate(r);
  } catch (const Error& e) {
    throw ParseError(e.code(), 0, e.what());
  }
}

void report(std::vector<ParseIssue>& issues, std::size_t line, const Error& e, const ParseOptions& options) {
  if (options.strict) {
    const auto* pe = dynamic_cast<const ParseError*>(&e);
    throw ParseError(e.code(), line, pe ? std::string(pe->what()) : std::string(e.what()));
  }
  issues.push_back(ParseIssue{line, e.code(), e.what()});
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

AttributeValue parse_attribute(const std::string& cell) {
  if (cell.empty()) return std::monostate{};
  double v = 0;
  if (parse_double(cell, v)) return v;
  return cell;
}

std::string format_attribute(const AttributeValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return "";
}

bool getline_nonempty(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

}  // namespace

CdrFormat parse_cdr_format(std::string_view token) {
  if (token == "CSV" || token == "csv") return CdrFormat::Csv;
  if (token == "JSON_LINES" || token == "jsonl") return CdrFormat::JsonLines;
  throw Error(ErrorCode::Validation, "unknown CDR format '" + std::string(token) + "'");
}

CdrRecord parse_cdr_csv_row(std::string_view row) {
  const auto f = split_csv_line(row);
  if (f.size() != kCdrFields) {
    throw ParseError(ErrorCode::Parse, 0, "expected 10 fields, got " + std::to_string(f.size()));
  }
  CdrRecord r;
  r.timestamp = parse_ts(f[0]);
  r.caller = parse_id(f[1]);
  if (!f[2].empty()) r.callee = parse_id(f[2]);
  r.kind = parse_kind(f[3]);
  r.duration_s = parse_quantity(f[4], "duration_s");
  r.bytes_up = parse_quantity(f[5], "bytes_up");
  r.bytes_down = parse_quantity(f[6], "bytes_down");
  if (!f[7].empty()) {
    r.rat = parse_radio_access(f[7]);
    if (!r.rat) throw ParseError(ErrorCode::Parse, 0, "unknown rat '" + f[7] + "'");
  }
  r.dropped = parse_flag(f[8]);
  r.cell_id = f[9];
  check(r);
  return r;
}

std::string format_cdr_csv_row(const CdrRecord& r) {
  std::string out;
  out.reserve(96);
  out += format_instant(r.timestamp);
  out += ',';
  out += r.caller.to_string();
  out += ',';
  if (r.callee) out += r.callee->to_string();
  out += ',';
  out += to_string(r.kind);
  out += ',';
  out += std::to_string(r.duration_s);
  out += ',';
  out += std::to_string(r.bytes_up);
  out += ',';
  out += std::to_string(r.bytes_down);
  out += ',';
  if (r.rat) out += to_string(*r.rat);
  out += ',';
  out += r.dropped ? '1' : '0';
  out += ',';
  out += csv_escape(r.cell_id);
  return out;
}

CdrRecord parse_cdr_json_row(std::string_view row) {
  json j;
  try {
    j = json::parse(row);
  } catch (const json::exception& e) {
    throw ParseError(ErrorCode::Parse, 0, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(ErrorCode::Parse, 0, "expected a JSON object");
  auto text = [&](const char* key, bool required) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) throw ParseError(ErrorCode::Parse, 0, std::string("missing key ") + key);
      return {};
    }
    if (!it->is_string()) throw ParseError(ErrorCode::Parse, 0, std::string("key ") + key + " is not a string");
    return it->get<std::string>();
  };
  auto number = [&](const char* key) -> std::int64_t {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return 0;
    if (!it->is_number_integer()) throw ParseError(ErrorCode::Parse, 0, std::string("key ") + key + " is not an integer");
    const auto v = it->get<std::int64_t>();
    if (v < 0) throw ParseError(ErrorCode::NegativeQuantity, 0, std::string("negative ") + key);
    return v;
  };
  CdrRecord r;
  r.timestamp = parse_ts(text("timestamp", true));
  r.caller = parse_id(text("caller", true));
  if (auto callee = text("callee", false); !callee.empty()) r.callee = parse_id(callee);
  r.kind = parse_kind(text("event_kind", true));
  r.duration_s = number("duration_s");
  r.bytes_up = number("bytes_up");
  r.bytes_down = number("bytes_down");
  if (auto rat = text("rat", false); !rat.empty()) {
    r.rat = parse_radio_access(rat);
    if (!r.rat) throw ParseError(ErrorCode::Parse, 0, "unknown rat '" + rat + "'");
  }
  if (auto it = j.find("dropped"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw ParseError(ErrorCode::Parse, 0, "key dropped is not a boolean");
    r.dropped = it->get<bool>();
  }
  r.cell_id = text("cell_id", false);
  check(r);
  return r;
}

std::string format_cdr_json_row(const CdrRecord& r) {
  json j;
  j["timestamp"] = format_instant(r.timestamp);
  j["caller"] = r.caller.to_string();
  j["callee"] = r.callee ? json(r.callee->to_string()) : json(nullptr);
  j["event_kind"] = to_string(r.kind);
  j["duration_s"] = r.duration_s;
  j["bytes_up"] = r.bytes_up;
  j["bytes_down"] = r.bytes_down;
  j["rat"] = r.rat ? json(std::string(to_string(*r.rat))) : json(nullptr);
  j["dropped"] = r.dropped;
  j["cell_id"] = r.cell_id;
  return j.dump();
}

CdrReader::CdrReader(std::istream& in, CdrFormat format, ParseOptions options)
    : in_(in), format_(format), options_(options) {}

std::optional<CdrRecord> CdrReader::next() {
  std::string line;
  if (format_ == CdrFormat::Csv && !header_checked_) {
    header_checked_ = true;
    if (!getline_nonempty(in_, line, line_no_)) return std::nullopt;
    if (line != kCdrCsvHeader) {
      throw ParseError(ErrorCode::Parse, line_no_, "CDR header does not match the documented schema");
    }
  }
  while (getline_nonempty(in_, line, line_no_)) {
    try {
      return format_ == CdrFormat::Csv ? parse_cdr_csv_row(line) : parse_cdr_json_row(line);
    } catch (const Error& e) {
      report(issues_, line_no_, e, options_);
    }
  }
  return std::nullopt;
}

ParseResult<CdrRecord> parse_cdr_stream(std::istream& in, CdrFormat format, ParseOptions options) {
  CdrReader reader(in, format, options);
  ParseResult<CdrRecord> result;
  while (auto r = reader.next()) result.items.push_back(std::move(*r));
  result.issues = reader.issues();
  return result;
}

ParseResult<CdrRecord> parse_cdr_file(const std::filesystem::path& path, CdrFormat format, ParseOptions options) {
  auto in = open(path);
  return parse_cdr_stream(in, format, options);
}

void write_cdr(std::ostream& out, std::span<const CdrRecord> records, CdrFormat format) {
  if (format == CdrFormat::Csv) out << kCdrCsvHeader << '\n';
  for (const auto& r : records) {
    out << (format == CdrFormat::Csv ? format_cdr_csv_row(r) : format_cdr_json_row(r)) << '\n';
  }
}

ParseResult<CustomerProfile> parse_profiles(std::istream& in, ParseOptions options) {
  ParseResult<CustomerProfile> result;
  std::string line;
  std::size_t line_no = 0;
  if (!getline_nonempty(in, line, line_no)) return result;
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "activation_date" || header[2] != "birth_year") {
    throw ParseError(ErrorCode::Parse, line_no, "profile header must start with id,activation_date,birth_year");
  }
  {
    std::set<std::string> names(header.begin() + 3, header.end());
    if (names.size() != header.size() - 3) {
      throw ParseError(ErrorCode::Parse, line_no, "duplicate attribute column");
    }
  }
  std::unordered_set<CustomerId, CustomerIdHash> seen;
  while (getline_nonempty(in, line, line_no)) {
    const auto f = split_csv_line(line);
    try {
      if (f.size() != header.size()) {
        throw ParseError(ErrorCode::Parse, 0, "expected " + std::to_string(header.size()) + " fields");
      }
      CustomerProfile p;
      p.id = parse_id(f[0]);
      try {
        p.activation_date = parse_date(f[1]);
      } catch (const Error& e) {
        throw ParseError(ErrorCode::BadTimestamp, 0, e.what());
      }
      if (!f[2].empty()) {
        std::int64_t y = 0;
        if (!parse_int64(f[2], y)) throw ParseError(ErrorCode::Parse, 0, "bad birth_year '" + f[2] + "'");
        p.birth_year = static_cast<int>(y);
      }
      for (std::size_t c = 3; c < f.size(); ++c) p.attributes.emplace_back(header[c], parse_attribute(f[c]));
      if (!seen.insert(p.id).second) {
        throw Error(ErrorCode::DuplicateIdentity, "line " + std::to_string(line_no) + ": duplicate profile for " +
                                                      p.id.to_string());
      }
      result.items.push_back(std::move(p));
    } catch (const ParseError& e) {
      report(result.issues, line_no, e, options);
    }
  }
  return result;
}

ParseResult<CustomerProfile> parse_profiles(const std::filesystem::path& path, ParseOptions options) {
  auto in = open(path);
  return parse_profiles(in, options);
}

void write_profiles(std::ostream& out, std::span<const CustomerProfile> profiles) {
  std::vector<std::string> header{"id", "activation_date", "birth_year"};
  if (!profiles.empty()) {
    for (const auto& [name, value] : profiles.front().attributes) header.push_back(name);
  }
  out << join_csv(header) << '\n';
  for (const auto& p : profiles) {
    std::vector<std::string> row{p.id.to_string(), format_date(p.activation_date),
                                 p.birth_year ? std::to_string(*p.birth_year) : std::string()};
    for (const auto& [name, value] : p.attributes) row.push_back(format_attribute(value));
    out << join_csv(row) << '\n';
  }
}

ParseResult<LabelRecord> parse_labels(std::istream& in, ParseOptions options) {
  ParseResult<LabelRecord> result;
  std::string line;
  std::size_t line_no = 0;
  if (!getline_nonempty(in, line, line_no)) return result;
  if (line != "id,label") throw ParseError(ErrorCode::Parse, line_no, "label header must be id,label");
  std::unordered_set<CustomerId, CustomerIdHash> seen;
  while (getline_nonempty(in, line, line_no)) {
    const auto f = split_csv_line(line);
    try {
      if (f.size() != 2) throw ParseError(ErrorCode::Parse, 0, "expected 2 fields");
      LabelRecord r;
      r.id = parse_id(f[0]);
      if (r.id.op != Operator::Home) throw ParseError(ErrorCode::Parse, 0, "labeled ids must be HOME customers");
      auto label = parse_label(f[1]);
      if (!label) throw ParseError(ErrorCode::Parse, 0, "unknown label '" + f[1] + "'");
      r.label = *label;
      if (!seen.insert(r.id).second) {
        throw Error(ErrorCode::DuplicateIdentity,
                    "line " + std::to_string(line_no) + ": duplicate label for " + r.id.to_string());
      }
      result.items.push_back(std::move(r));
    } catch (const ParseError& e) {
      report(result.issues, line_no, e, options);
    }
  }
  return result;
}

ParseResult<LabelRecord> parse_labels(const std::filesystem::path& path, ParseOptions options) {
  auto in = open(path);
  return parse_labels(in, options);
}

void write_labels(std::ostream& out, std::span<const LabelRecord> labels) {
  out << "id,label\n";
  for (const auto& l : labels) out << l.id.to_string() << ',' << to_string(l.label) << '\n';
}

}  // namespace churnforge
