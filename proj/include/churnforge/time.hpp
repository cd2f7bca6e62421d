#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace churnforge {

using Instant = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DDTHH:MM:SSZ`. Throws Error(BadTimestamp).
Instant parse_instant(std::string_view text);
/// Parses `YYYY-MM-DD`. Throws Error(BadTimestamp).
Date parse_date(std::string_view text);

std::string format_instant(Instant t);
std::string format_date(Date d);

/// Calendar month arithmetic; the day is clamped to the target month's length.
Date add_months(Date d, int months);

/// Half-open time interval [start, end).
struct Window {
  Instant start;
  Instant end;

  bool contains(Instant t) const noexcept { return t >= start && t < end; }
  bool empty() const noexcept { return end <= start; }
  double days() const noexcept;
};

/// The `months` calendar months immediately preceding `baseline`.
Window months_before(Date baseline, int months);

inline Instant start_of(Date d) { return std::chrono::time_point_cast<std::chrono::seconds>(d); }

}  // namespace churnforge
