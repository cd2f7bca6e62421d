#include "churnforge/statistical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "churnforge/error.hpp"
#include "churnforge/util.hpp"

namespace churnforge {
namespace {

enum Family : std::size_t { CallOut, CallIn, SmsOut, SmsIn, MmsOut, MmsIn, DataSession, kFamilies };

constexpr std::array<std::string_view, kFamilies> kFamilyNames{"call_out", "call_in", "sms_out", "sms_in",
                                                                "mms_out",  "mms_in",  "data"};

struct Agg {
  double count = 0, sum = 0;
  double max = -std::numeric_limits<double>::infinity();
  double min = std::numeric_limits<double>::infinity();

  void add(double v) {
    ++count;
    sum += v;
    max = std::max(max, v);
    min = std::min(min, v);
  }
};

struct Customer {
  std::vector<Agg> agg;  // [family * periods + period]
  std::unordered_set<std::string> contacts, contacts_out, cells;
  std::array<double, 4> week_out{};
  std::unordered_map<std::int64_t, double> daily_out_m1;
  std::unordered_set<std::int64_t> active_days_m1;
  double bytes_up = 0, bytes_down = 0;
  std::optional<Instant> last_outgoing;
  double sessions = 0, fast_sessions = 0;
  double comm_events = 0, competitor_events = 0, landline_events = 0;
  double dropped = 0;
  double out_events = 0, out_events_m1 = 0;
};

Family family_of(EventKind kind, bool outgoing) {
  switch (kind) {
    case EventKind::Call: return outgoing ? CallOut : CallIn;
    case EventKind::Sms: return outgoing ? SmsOut : SmsIn;
    case EventKind::Mms: return outgoing ? MmsOut : MmsIn;
    case EventKind::Data: return DataSession;
  }
  return DataSession;
}

bool has_magnitude(std::size_t f) { return f == CallOut || f == CallIn || f == DataSession; }

}  // namespace

StatisticalFeatures statistical_features(std::span<const CdrRecord> records,
                                         std::span<const CustomerProfile> profiles, int window_months,
                                         Date baseline) {
  if (window_months < 1) throw Error(ErrorCode::InvalidArgument, "window must span at least one month");
  StatisticalFeatures out;

  std::vector<const CustomerProfile*> rows;
  rows.reserve(profiles.size());
  for (const auto& p : profiles) rows.push_back(&p);
  std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  std::unordered_map<CustomerId, std::size_t, CustomerIdHash> index;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!index.emplace(rows[i]->id, i).second) {
      throw Error(ErrorCode::DuplicateIdentity, "duplicate profile " + rows[i]->id.to_string());
    }
  }

  const auto periods = static_cast<std::size_t>(window_months) + 1;  // m1..mW, then the whole window
  std::vector<Instant> bounds;  // bounds[k]: start of month k+1 before the baseline
  for (int k = 1; k <= window_months; ++k) bounds.push_back(start_of(add_months(baseline, -k)));
  const Window window = months_before(baseline, window_months);
  const Window m1 = months_before(baseline, 1);
  const Instant end = window.end;
  auto month_of = [&](Instant t) {
    std::size_t k = 0;
    while (t < bounds[k]) ++k;
    return k;
  };

  std::vector<Customer> acc(rows.size());
  for (auto& c : acc) c.agg.resize(kFamilies * periods);
  std::size_t in_window = 0;

  for (const auto& r : records) {
    if (!window.contains(r.timestamp)) continue;
    ++in_window;
    const std::size_t month = month_of(r.timestamp);
    const bool final_month = month == 0;
    const auto day = std::chrono::floor<std::chrono::days>(r.timestamp).time_since_epoch().count();

    for (int side = 0; side < 2; ++side) {
      const bool outgoing = side == 0;
      if (!outgoing && !r.callee) break;
      const CustomerId& self = outgoing ? r.caller : *r.callee;
      auto it = index.find(self);
      if (it == index.end()) continue;
      Customer& c = acc[it->second];
      const Family f = family_of(r.kind, outgoing);
      const double magnitude = r.kind == EventKind::Data ? static_cast<double>(r.bytes_up + r.bytes_down)
                                                         : static_cast<double>(r.duration_s);
      c.agg[f * periods + month].add(magnitude);
      c.agg[f * periods + periods - 1].add(magnitude);
      if (!r.cell_id.empty() && outgoing) c.cells.insert(r.cell_id);
      if (final_month) c.active_days_m1.insert(day);

      if (r.kind == EventKind::Data) {
        c.bytes_up += static_cast<double>(r.bytes_up);
        c.bytes_down += static_cast<double>(r.bytes_down);
        ++c.sessions;
        if (r.rat && *r.rat != RadioAccess::G2) ++c.fast_sessions;
        continue;
      }

      const CustomerId& other = outgoing ? *r.callee : r.caller;
      const auto other_text = other.to_string();
      c.contacts.insert(other_text);
      ++c.comm_events;
      if (other.op == Operator::Competitor) ++c.competitor_events;
      if (other.op == Operator::Landline) ++c.landline_events;
      if (r.kind == EventKind::Call && r.dropped) ++c.dropped;
      if (outgoing) {
        c.contacts_out.insert(other_text);
        ++c.out_events;
        if (!c.last_outgoing || r.timestamp > *c.last_outgoing) c.last_outgoing = r.timestamp;
        if (final_month) {
          ++c.out_events_m1;
          ++c.daily_out_m1[day];
          const auto offset = std::chrono::floor<std::chrono::days>(r.timestamp - m1.start).count();
          ++c.week_out[static_cast<std::size_t>(std::min<std::int64_t>(offset / 7, 3))];
        }
      }
    }
  }
  if (in_window == 0) {
    out.warnings.push_back(fmt::format("no CDR records fall in the {}-month window before {}", window_months,
                                       format_date(baseline)));
  }

  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto* p : rows) ids.push_back(p->id.to_string());
  FeatureMatrix m(std::move(ids));
  const std::size_t n = rows.size();

  auto column = [&](std::string name, auto&& value) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = value(acc[i], i);
    m.add_column(FeatureColumn::numeric(std::move(name), std::move(v)));
  };

  for (std::size_t f = 0; f < kFamilies; ++f) {
    const std::string_view magnitude = f == DataSession ? "bytes" : "dur";
    for (std::size_t p = 0; p < periods; ++p) {
      const std::string period = p + 1 == periods ? "all" : fmt::format("m{}", p + 1);
      const std::string prefix = fmt::format("{}_{}", kFamilyNames[f], period);
      auto slot = [f, p, periods](const Customer& c) -> const Agg& { return c.agg[f * periods + p]; };
      column(prefix + "_count", [&](const Customer& c, std::size_t) { return slot(c).count; });
      if (!has_magnitude(f)) continue;
      column(fmt::format("{}_{}_sum", prefix, magnitude), [&](const Customer& c, std::size_t) { return slot(c).sum; });
      column(fmt::format("{}_{}_mean", prefix, magnitude), [&](const Customer& c, std::size_t) {
        const auto& a = slot(c);
        return a.count > 0 ? a.sum / a.count : 0.0;
      });
      column(fmt::format("{}_{}_max", prefix, magnitude),
             [&](const Customer& c, std::size_t) { return slot(c).count > 0 ? slot(c).max : 0.0; });
      column(fmt::format("{}_{}_min", prefix, magnitude),
             [&](const Customer& c, std::size_t) { return slot(c).count > 0 ? slot(c).min : 0.0; });
    }
  }

  column("data_bytes_up_sum", [](const Customer& c, std::size_t) { return c.bytes_up; });
  column("data_bytes_down_sum", [](const Customer& c, std::size_t) { return c.bytes_down; });
  column("distinct_contacts", [](const Customer& c, std::size_t) { return static_cast<double>(c.contacts.size()); });
  column("distinct_contacts_out",
         [](const Customer& c, std::size_t) { return static_cast<double>(c.contacts_out.size()); });
  column("distinct_cells", [](const Customer& c, std::size_t) { return static_cast<double>(c.cells.size()); });
  for (std::size_t w = 0; w < 4; ++w) {
    column(fmt::format("out_events_m1_w{}", w + 1), [w](const Customer& c, std::size_t) { return c.week_out[w]; });
  }
  column("active_days_m1", [](const Customer& c, std::size_t) { return static_cast<double>(c.active_days_m1.size()); });
  column("max_daily_out_events_m1", [](const Customer& c, std::size_t) {
    double best = 0;
    for (const auto& [day, count] : c.daily_out_m1) best = std::max(best, count);
    return best;
  });

  const double window_days = window.days();
  column("days_since_last_outgoing", [&](const Customer& c, std::size_t) {
    if (!c.last_outgoing) return window_days;
    return std::chrono::duration<double>(end - *c.last_outgoing).count() / 86400.0;
  });
  column("avg_radio_access_type",
         [](const Customer& c, std::size_t) { return c.sessions > 0 ? c.fast_sessions / c.sessions : 0.0; });
  column("pct_competitor_transactions",
         [](const Customer& c, std::size_t) { return c.comm_events > 0 ? c.competitor_events / c.comm_events : 0.0; });
  column("pct_landline_transactions",
         [](const Customer& c, std::size_t) { return c.comm_events > 0 ? c.landline_events / c.comm_events : 0.0; });
  column("dropped_call_count", [](const Customer& c, std::size_t) { return c.dropped; });
  column("last_month_activity_ratio", [&](const Customer& c, std::size_t) {
    const double monthly = c.out_events / static_cast<double>(window_months);
    return monthly > 0 ? c.out_events_m1 / monthly : 0.0;
  });
  const int baseline_year = static_cast<int>(std::chrono::year_month_day(baseline).year());
  column("customer_age", [&](const Customer&, std::size_t i) {
    const auto& by = rows[i]->birth_year;
    return by ? static_cast<double>(baseline_year - *by) : std::numeric_limits<double>::quiet_NaN();
  });

  // Profile attribute passthrough, in first-seen order.
  std::vector<std::string> names;
  for (const auto* p : rows) {
    for (const auto& [name, value] : p->attributes) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  for (const auto& name : names) {
    bool textual = false;
    for (const auto* p : rows) {
      const auto* v = p->attribute(name);
      textual = textual || (v && std::holds_alternative<std::string>(*v));
    }
    if (textual) {
      std::vector<std::optional<std::string>> cells(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto* v = rows[i]->attribute(name);
        if (!v || is_missing(*v)) continue;
        cells[i] = std::holds_alternative<std::string>(*v) ? std::get<std::string>(*v)
                                                            : format_double(std::get<double>(*v));
      }
      m.add_column(FeatureColumn::categorical(name, std::move(cells)));
    } else {
      std::vector<double> cells(n, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t i = 0; i < n; ++i) {
        const auto* v = rows[i]->attribute(name);
        if (v && std::holds_alternative<double>(*v)) cells[i] = std::get<double>(*v);
      }
      m.add_column(FeatureColumn::numeric(name, std::move(cells)));
    }
  }

  out.matrix = std::move(m);
  return out;
}

}  // namespace churnforge
