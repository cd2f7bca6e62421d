#include "churnforge/time.hpp"

#include <charconv>
#include <cstdio>

#include "churnforge/error.hpp"

namespace churnforge {
namespace {

using namespace std::chrono;

bool read_fixed(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{};
}

[[noreturn]] void bad(std::string_view text) {
  throw Error(ErrorCode::BadTimestamp, "cannot parse '" + std::string(text) + "'");
}

Date checked_date(std::string_view text, int y, int m, int d) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad(text);
  return sys_days{ymd};
}

}  // namespace

Date parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !read_fixed(text, 0, 4, y) ||
      !read_fixed(text, 5, 2, m) || !read_fixed(text, 8, 2, d)) {
    bad(text);
  }
  return checked_date(text, y, m, d);
}

Instant parse_instant(std::string_view text) {
  int hh = 0, mm = 0, ss = 0;
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' || text[19] != 'Z' ||
      !read_fixed(text, 11, 2, hh) || !read_fixed(text, 14, 2, mm) || !read_fixed(text, 17, 2, ss) ||
      hh > 23 || mm > 59 || ss > 59) {
    bad(text);
  }
  const Date day = parse_date(text.substr(0, 10));
  return start_of(day) + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_instant(Instant t) {
  const Date day = floor<days>(t);
  const hh_mm_ss<seconds> tod{t - start_of(day)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()));
  return format_date(day) + buf;
}

Date add_months(Date d, int months) {
  const year_month_day ymd{d};
  year_month ym = ymd.year() / ymd.month();
  ym += std::chrono::months{months};
  const year_month_day_last last{ym.year(), month_day_last{ym.month()}};
  const day dd = ymd.day() > last.day() ? last.day() : ymd.day();
  return sys_days{ym.year() / ym.month() / dd};
}

double Window::days() const noexcept {
  return static_cast<double>((end - start).count()) / 86400.0;
}

Window months_before(Date baseline, int months) {
  return Window{start_of(add_months(baseline, -months)), start_of(baseline)};
}

}  // namespace churnforge
