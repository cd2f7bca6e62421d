#include "churnforge/records.hpp"

#include <functional>

#include "churnforge/error.hpp"

namespace churnforge {

std::string_view to_string(Operator op) noexcept {
  switch (op) {
    case Operator::Home: return "HOME";
    case Operator::Competitor: return "COMPETITOR";
    case Operator::Landline: return "LANDLINE";
  }
  return "?";
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Call: return "CALL";
    case EventKind::Sms: return "SMS";
    case EventKind::Mms: return "MMS";
    case EventKind::Data: return "DATA";
  }
  return "?";
}

std::string_view to_string(RadioAccess rat) noexcept {
  switch (rat) {
    case RadioAccess::G2: return "2G";
    case RadioAccess::G3: return "3G";
    case RadioAccess::G4: return "4G";
  }
  return "?";
}

std::string_view to_string(Label label) noexcept { return label == Label::Churn ? "CHURN" : "ACTIVE"; }

std::optional<Operator> parse_operator(std::string_view t) noexcept {
  if (t == "HOME") return Operator::Home;
  if (t == "COMPETITOR") return Operator::Competitor;
  if (t == "LANDLINE") return Operator::Landline;
  return std::nullopt;
}

std::optional<EventKind> parse_event_kind(std::string_view t) noexcept {
  if (t == "CALL") return EventKind::Call;
  if (t == "SMS") return EventKind::Sms;
  if (t == "MMS") return EventKind::Mms;
  if (t == "DATA") return EventKind::Data;
  return std::nullopt;
}

std::optional<RadioAccess> parse_radio_access(std::string_view t) noexcept {
  if (t == "2G" || t == "G2") return RadioAccess::G2;
  if (t == "3G" || t == "G3") return RadioAccess::G3;
  if (t == "4G" || t == "G4") return RadioAccess::G4;
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view t) noexcept {
  if (t == "CHURN") return Label::Churn;
  if (t == "ACTIVE") return Label::Active;
  return std::nullopt;
}

std::string CustomerId::to_string() const {
  std::string out(churnforge::to_string(op));
  out.push_back(':');
  out += number;
  return out;
}

CustomerId CustomerId::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::Parse, "customer id '" + std::string(text) + "' is not OPERATOR:number");
  }
  auto op = parse_operator(text.substr(0, colon));
  if (!op) throw Error(ErrorCode::Parse, "unknown operator in '" + std::string(text) + "'");
  std::string number(text.substr(colon + 1));
  if (number.empty()) throw Error(ErrorCode::Parse, "empty number in '" + std::string(text) + "'");
  return CustomerId{*op, std::move(number)};
}

std::size_t CustomerIdHash::operator()(const CustomerId& id) const noexcept {
  return std::hash<std::string>{}(id.number) * 3 + static_cast<std::size_t>(id.op);
}

void validate(const CdrRecord& r) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (r.duration_s < 0 || r.bytes_up < 0 || r.bytes_down < 0) {
    throw Error(ErrorCode::NegativeQuantity, "negative duration or byte count");
  }
  if (r.caller.number.empty()) fail("empty caller");
  if (r.duration_s > 0 && r.kind != EventKind::Call) fail("duration on a non-CALL event");
  if (r.bytes_up + r.bytes_down > 0 && r.kind != EventKind::Data) fail("bytes on a non-DATA event");
  if (r.kind == EventKind::Data) {
    if (r.callee) fail("DATA event with a callee");
  } else {
    if (!r.callee) fail(std::string(to_string(r.kind)) + " event without a callee");
    if (r.rat) fail("radio access type on a non-DATA event");
  }
  if (r.dropped && r.kind != EventKind::Call) fail("dropped flag on a non-CALL event");
}

const AttributeValue* CustomerProfile::attribute(std::string_view name) const noexcept {
  for (const auto& [key, value] : attributes) {
    if (key == name) return &value;
  }
  return nullptr;
}

}  // namespace churnforge
