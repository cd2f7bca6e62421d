#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "churnforge/time.hpp"

namespace churnforge {

enum class Operator : std::uint8_t { Home, Competitor, Landline };
enum class EventKind : std::uint8_t { Call, Sms, Mms, Data };
enum class RadioAccess : std::uint8_t { G2, G3, G4 };
enum class Label : std::uint8_t { Active, Churn };

std::string_view to_string(Operator op) noexcept;
std::string_view to_string(EventKind kind) noexcept;
std::string_view to_string(RadioAccess rat) noexcept;
std::string_view to_string(Label label) noexcept;

std::optional<Operator> parse_operator(std::string_view token) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view token) noexcept;
std::optional<RadioAccess> parse_radio_access(std::string_view token) noexcept;
std::optional<Label> parse_label(std::string_view token) noexcept;

/// Subscriber identity; (operator, number) is the key. Text form is `OPERATOR:number`.
struct CustomerId {
  Operator op = Operator::Home;
  std::string number;

  std::string to_string() const;
  /// Throws Error(Parse) on a malformed token.
  static CustomerId parse(std::string_view text);

  friend bool operator==(const CustomerId&, const CustomerId&) = default;
  friend std::strong_ordering operator<=>(const CustomerId& a, const CustomerId& b) {
    if (auto c = a.op <=> b.op; c != 0) return c;
    return a.number.compare(b.number) <=> 0;
  }
};

struct CustomerIdHash {
  std::size_t operator()(const CustomerId& id) const noexcept;
};

/// One timestamped interaction event. `callee` is absent for DATA sessions.
struct CdrRecord {
  Instant timestamp{};
  CustomerId caller;
  std::optional<CustomerId> callee;
  EventKind kind = EventKind::Call;
  std::int64_t duration_s = 0;
  std::int64_t bytes_up = 0;
  std::int64_t bytes_down = 0;
  std::optional<RadioAccess> rat;
  bool dropped = false;
  std::string cell_id;

  bool is_interaction() const noexcept { return kind != EventKind::Data; }

  friend bool operator==(const CdrRecord&, const CdrRecord&) = default;
};

/// Throws Error(InvalidArgument) when a record breaks the per-kind field rules.
void validate(const CdrRecord& record);

using AttributeValue = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const AttributeValue& v) noexcept {
  return std::holds_alternative<std::monostate>(v);
}

struct CustomerProfile {
  CustomerId id;
  Date activation_date{};
  std::optional<int> birth_year;
  /// Free attribute columns in file order.
  std::vector<std::pair<std::string, AttributeValue>> attributes;

  const AttributeValue* attribute(std::string_view name) const noexcept;

  friend bool operator==(const CustomerProfile&, const CustomerProfile&) = default;
};

struct LabelRecord {
  CustomerId id;
  Label label = Label::Active;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

}  // namespace churnforge
