#include "churnforge/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <random>

#include <fmt/format.h>

#include "churnforge/error.hpp"
#include "churnforge/util.hpp"

namespace churnforge {
namespace {

using Rng = std::mt19937_64;
using std::chrono::seconds;

struct Line {
  CustomerId id;
  Instant start;                     // first active instant
  std::vector<std::uint32_t> reach;  // HOME friends it talks to
};

struct Person {
  CustomerId id;
  bool churn = false;
  bool recent = false;
  Date activation{};
  std::size_t community = 0;
  double rate = 0.0;       // outgoing comm events per month
  double sessions = 0.0;   // data sessions per month, 0 for non-users
  double p_competitor = 0.0;
  double p_landline = 0.0;
  double p_drop = 0.0;
  double p_slow = 0.0;
  double decay = 0.0;
  int dip_month = 0;  // 0: no dip
  std::vector<std::uint32_t> friends;
  std::vector<std::uint32_t> competitors;
  std::vector<std::uint32_t> landlines;
  std::vector<std::string> cells;
  std::optional<Line> extra_line;
};

constexpr std::array<double, 3> kRamp{1.0, 0.55, 0.25};
constexpr std::array<double, 3> kDipRamp{1.0, 0.45, 0.15};

double ramp_at(const std::array<double, 3>& ramp, int distance) {
  return distance >= 0 && distance < static_cast<int>(ramp.size()) ? ramp[static_cast<std::size_t>(distance)] : 0.0;
}

/// Activity multiplier for month k (1 = the month right before the baseline).
double multiplier(const Person& p, int k) {
  double m = 1.0;
  if (p.churn) m = 1.0 - p.decay * ramp_at(kRamp, k - 1);
  if (p.dip_month > 0) m = std::min(m, 1.0 - p.decay * ramp_at(kDipRamp, std::abs(k - p.dip_month)));
  return std::max(m, 0.02);
}

std::string home_number(std::size_t i) { return fmt::format("7{:07d}", i); }
std::string competitor_number(std::size_t i) { return fmt::format("3{:07d}", i); }
std::string landline_number(std::size_t i) { return fmt::format("1{:07d}", i); }

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return std::bernoulli_distribution(std::clamp(p, 0.0, 1.0))(rng); }
int poisson(Rng& rng, double mean) { return mean > 0.0 ? std::poisson_distribution<int>(mean)(rng) : 0; }
template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

Instant random_instant(Rng& rng, Instant lo, Instant hi) {
  const auto span = (hi - lo).count();
  return lo + seconds(std::uniform_int_distribution<std::int64_t>(0, span - 1)(rng));
}

class Emitter {
 public:
  explicit Emitter(std::vector<CdrRecord>& out) : out_(out) {}

  void comm(Rng& rng, Instant t, const CustomerId& from, const CustomerId& to, EventKind kind, double p_drop,
            const std::string& cell) {
    CdrRecord r;
    r.timestamp = t;
    r.caller = from;
    r.callee = to;
    r.kind = kind;
    r.cell_id = cell;
    if (kind == EventKind::Call) {
      if (chance(rng, p_drop)) {
        r.dropped = true;
        r.duration_s = std::uniform_int_distribution<std::int64_t>(1, 30)(rng);
      } else {
        r.duration_s = 1 + static_cast<std::int64_t>(std::lognormal_distribution<double>(4.3, 0.9)(rng));
      }
    }
    out_.push_back(std::move(r));
  }

  void data(Rng& rng, Instant t, const CustomerId& who, double p_slow, const std::string& cell) {
    CdrRecord r;
    r.timestamp = t;
    r.caller = who;
    r.kind = EventKind::Data;
    r.cell_id = cell;
    if (chance(rng, p_slow)) {
      r.rat = RadioAccess::G2;
    } else {
      r.rat = chance(rng, 0.6) ? RadioAccess::G4 : RadioAccess::G3;
    }
    const double scale = *r.rat == RadioAccess::G2 ? 0.1 : 1.0;
    r.bytes_down = static_cast<std::int64_t>(scale * std::lognormal_distribution<double>(15.0, 1.0)(rng));
    r.bytes_up = static_cast<std::int64_t>(scale * std::lognormal_distribution<double>(12.5, 1.0)(rng));
    out_.push_back(std::move(r));
  }

 private:
  std::vector<CdrRecord>& out_;
};

EventKind comm_kind(Rng& rng) {
  const double u = uniform(rng, 0.0, 1.0);
  return u < 0.7 ? EventKind::Call : (u < 0.95 ? EventKind::Sms : EventKind::Mms);
}

void choose(Rng& rng, std::vector<std::uint32_t>& pool, std::size_t n, std::vector<std::uint32_t>& out) {
  for (std::size_t i = 0; i < n && !pool.empty(); ++i) {
    std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
    std::swap(pool[i], pool[d(rng)]);
  }
  out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(n, pool.size())));
}

std::vector<std::uint32_t> sample_indices(Rng& rng, std::vector<std::uint32_t> pool, std::size_t n) {
  std::vector<std::uint32_t> out;
  choose(rng, pool, n, out);
  std::sort(out.begin(), out.end());
  return out;
}

void build_population(const SyntheticSpec& spec, std::uint64_t seed, std::vector<Person>& people,
                      std::size_t& n_competitors, std::size_t& n_landlines) {
  const std::size_t n = spec.customers;
  Rng rng(derive_seed(seed, "population"));
  people.resize(n);
  for (std::size_t i = 0; i < n; ++i) people[i].id = CustomerId{Operator::Home, home_number(i)};

  std::vector<std::uint32_t> all(n);
  for (std::uint32_t i = 0; i < n; ++i) all[i] = i;
  const auto n_churn = static_cast<std::size_t>(std::llround(spec.churn_rate * static_cast<double>(n)));
  for (auto i : sample_indices(rng, all, n_churn)) people[i].churn = true;

  std::vector<std::uint32_t> churners, actives;
  for (std::uint32_t i = 0; i < n; ++i) (people[i].churn ? churners : actives).push_back(i);
  for (const auto* cls : {&churners, &actives}) {
    const auto k = static_cast<std::size_t>(std::llround(spec.recent_activation_share * static_cast<double>(cls->size())));
    for (auto i : sample_indices(rng, *cls, k)) people[i].recent = true;
  }

  const Date history_start = add_months(spec.baseline, -spec.months);
  const Date recent_start = add_months(spec.baseline, -spec.recent_activation_months);
  for (auto& p : people) {
    if (p.recent) {
      const auto span = (spec.baseline - recent_start).count();
      p.activation = recent_start + std::chrono::days(std::uniform_int_distribution<long>(0, span - 1)(rng));
    } else {
      p.activation = history_start - std::chrono::days(std::uniform_int_distribution<long>(1, 3000)(rng));
    }
  }

  // Communities over a shuffled order so ids carry no community structure.
  std::vector<std::uint32_t> order = all;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t community_size = std::max<std::size_t>(spec.community_size, 2);
  const std::size_t n_communities = (n + community_size - 1) / community_size;
  std::vector<std::vector<std::uint32_t>> members(n_communities);
  for (std::size_t pos = 0; pos < n; ++pos) {
    people[order[pos]].community = pos / community_size;
    members[pos / community_size].push_back(order[pos]);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const int links = poisson(rng, spec.mean_friends / 2.0);
    const auto& group = members[people[i].community];
    for (int l = 0; l < links; ++l) {
      const std::uint32_t j = chance(rng, 0.85) ? pick(rng, group) : pick(rng, all);
      if (j == i) continue;
      people[i].friends.push_back(j);
      people[j].friends.push_back(i);
    }
  }
  for (auto& p : people) {
    std::sort(p.friends.begin(), p.friends.end());
    p.friends.erase(std::unique(p.friends.begin(), p.friends.end()), p.friends.end());
  }

  n_competitors = static_cast<std::size_t>(std::llround(spec.competitor_ratio * static_cast<double>(n)));
  n_landlines = static_cast<std::size_t>(std::llround(spec.landline_ratio * static_cast<double>(n)));

  for (auto& p : people) {
    if (n_competitors > 0) {
      const int k = 1 + poisson(rng, 1.5);
      for (int c = 0; c < k; ++c) {
        p.competitors.push_back(static_cast<std::uint32_t>(
            std::uniform_int_distribution<std::size_t>(0, n_competitors - 1)(rng)));
      }
    }
    if (n_landlines > 0 && chance(rng, 0.5)) {
      p.landlines.push_back(static_cast<std::uint32_t>(
          std::uniform_int_distribution<std::size_t>(0, n_landlines - 1)(rng)));
    }
    p.rate = spec.mean_monthly_events * std::lognormal_distribution<double>(-0.245, 0.7)(rng);
    p.sessions = chance(rng, spec.internet_user_share)
                     ? spec.mean_monthly_sessions * std::lognormal_distribution<double>(-0.125, 0.5)(rng)
                     : 0.0;
    p.p_competitor = std::clamp(std::normal_distribution<double>(0.12, 0.05)(rng), 0.01, 0.6);
    p.p_landline = p.landlines.empty() ? 0.0 : 0.03;
    p.p_drop = std::clamp(std::normal_distribution<double>(0.02, 0.01)(rng), 0.0, 0.2);
    p.p_slow = std::clamp(std::normal_distribution<double>(0.15, 0.07)(rng), 0.0, 0.9);
    const int n_cells = std::uniform_int_distribution<int>(2, 4)(rng);
    for (int c = 0; c < n_cells; ++c) {
      p.cells.push_back(fmt::format("CELL{:04d}", (p.community * 7 + static_cast<std::size_t>(c) * 3) % 5000));
    }
    if (p.churn) {
      p.decay = std::clamp(spec.activity_decay * uniform(rng, 0.4, 1.6), 0.0, 0.95);
      p.p_competitor = std::min(0.8, p.p_competitor + spec.competitor_shift);
      p.p_drop = std::min(0.5, p.p_drop + spec.dropped_call_shift);
      p.p_slow = std::min(0.95, p.p_slow + spec.slow_radio_shift);
    } else if (chance(rng, spec.active_dip_share)) {
      p.decay = std::clamp(spec.activity_decay * uniform(rng, 0.4, 1.6), 0.0, 0.95);
      p.dip_month = std::uniform_int_distribution<int>(1, std::max(spec.months, 1))(rng);
    }
  }

  // Shadow lines for churners and long-lived second lines for a few actives.
  std::size_t next_line = n_competitors;
  const Instant end = start_of(spec.baseline);
  for (auto& p : people) {
    const bool shadow = p.churn && chance(rng, spec.shadow_probability);
    const bool dual = !p.churn && chance(rng, spec.dual_line_share);
    if (!(shadow || dual) || p.friends.empty()) continue;
    Line line;
    line.id = CustomerId{Operator::Competitor, competitor_number(next_line++)};
    const int days_back = shadow ? std::uniform_int_distribution<int>(60, 91)(rng)
                                 : std::uniform_int_distribution<int>(60, 30 * std::max(spec.months, 3))(rng);
    line.start = std::max(end - std::chrono::days(days_back), start_of(std::max(p.activation, history_start)));
    for (auto f : p.friends) {
      if (chance(rng, spec.shadow_reach)) line.reach.push_back(f);
    }
    if (line.reach.empty()) line.reach.push_back(pick(rng, p.friends));
    p.extra_line = std::move(line);
  }
}

void emit_person(const SyntheticSpec& spec, std::uint64_t seed, std::size_t index, const std::vector<Person>& people,
                 std::vector<CdrRecord>& out) {
  const Person& p = people[index];
  Rng rng(derive_seed(seed, "events", index));
  Emitter emit(out);
  const Instant active_from = start_of(p.activation);

  for (int k = 1; k <= spec.months; ++k) {
    Instant lo = start_of(add_months(spec.baseline, -k));
    const Instant hi = start_of(add_months(spec.baseline, -k + 1));
    lo = std::max(lo, active_from);
    if (lo >= hi) continue;
    const double share = std::chrono::duration<double>(hi - lo).count() /
                         std::chrono::duration<double>(hi - start_of(add_months(spec.baseline, -k))).count();
    const double mult = multiplier(p, k);
    const double month_noise = std::lognormal_distribution<double>(-0.03, 0.25)(rng);

    const int n_out = poisson(rng, p.rate * mult * month_noise * share);
    for (int e = 0; e < n_out; ++e) {
      const Instant t = random_instant(rng, lo, hi);
      const double u = uniform(rng, 0.0, 1.0);
      CustomerId to;
      if (u < p.p_competitor && !p.competitors.empty()) {
        to = CustomerId{Operator::Competitor, competitor_number(pick(rng, p.competitors))};
      } else if (u < p.p_competitor + p.p_landline && !p.landlines.empty()) {
        to = CustomerId{Operator::Landline, landline_number(pick(rng, p.landlines))};
      } else if (!p.friends.empty()) {
        to = people[pick(rng, p.friends)].id;
      } else if (!p.competitors.empty()) {
        to = CustomerId{Operator::Competitor, competitor_number(pick(rng, p.competitors))};
      } else {
        continue;
      }
      const EventKind kind = to.op == Operator::Landline ? EventKind::Call : comm_kind(rng);
      emit.comm(rng, t, p.id, to, kind, p.p_drop, pick(rng, p.cells));
    }

    // Incoming traffic from outside the home network.
    const int n_in = poisson(rng, p.rate * (p.p_competitor + p.p_landline) * 0.8 * 0.5 * (1.0 + mult) * share);
    for (int e = 0; e < n_in && !p.competitors.empty(); ++e) {
      const Instant t = random_instant(rng, lo, hi);
      const CustomerId from = (!p.landlines.empty() && chance(rng, 0.15))
                                  ? CustomerId{Operator::Landline, landline_number(p.landlines.front())}
                                  : CustomerId{Operator::Competitor, competitor_number(pick(rng, p.competitors))};
      const EventKind kind = chance(rng, 0.75) ? EventKind::Call : EventKind::Sms;
      emit.comm(rng, t, from, p.id, kind, p.p_drop, pick(rng, p.cells));
    }

    const int n_data = poisson(rng, p.sessions * mult * month_noise * share);
    for (int e = 0; e < n_data; ++e) emit.data(rng, random_instant(rng, lo, hi), p.id, p.p_slow, pick(rng, p.cells));

    if (p.extra_line) {
      const auto& line = *p.extra_line;
      const Instant llo = std::max(lo, line.start);
      if (llo < hi) {
        const double lshare = std::chrono::duration<double>(hi - llo).count() /
                              std::chrono::duration<double>(hi - lo).count() * share;
        for (auto f : line.reach) {
          const int calls = poisson(rng, 3.0 * lshare);
          for (int c = 0; c < calls; ++c) {
            const Instant t = random_instant(rng, llo, hi);
            const auto& friend_person = people[f];
            if (chance(rng, 0.5)) {
              emit.comm(rng, t, line.id, friend_person.id, comm_kind(rng), friend_person.p_drop,
                        pick(rng, friend_person.cells));
            } else {
              emit.comm(rng, t, friend_person.id, line.id, comm_kind(rng), friend_person.p_drop,
                        pick(rng, friend_person.cells));
            }
          }
        }
      }
    }
  }
}

/// Final-month outgoing CALL/SMS/MMS count per HOME index.
std::vector<std::size_t> final_month_outgoing(const SyntheticSpec& spec, const std::vector<CdrRecord>& records,
                                              const std::unordered_map<CustomerId, std::uint32_t, CustomerIdHash>& idx,
                                              std::size_t n) {
  const Window m1{start_of(add_months(spec.baseline, -1)), start_of(spec.baseline)};
  std::vector<std::size_t> counts(n, 0);
  for (const auto& r : records) {
    if (!r.is_interaction() || !m1.contains(r.timestamp)) continue;
    if (auto it = idx.find(r.caller); it != idx.end()) ++counts[it->second];
  }
  return counts;
}

void enforce_final_month_gap(const SyntheticSpec& spec, const std::vector<Person>& people,
                             std::vector<CdrRecord>& records) {
  std::unordered_map<CustomerId, std::uint32_t, CustomerIdHash> idx;
  for (std::uint32_t i = 0; i < people.size(); ++i) idx.emplace(people[i].id, i);
  auto counts = final_month_outgoing(spec, records, idx, people.size());
  auto means = [&] {
    double churn = 0, active = 0;
    std::size_t nc = 0, na = 0;
    for (std::size_t i = 0; i < people.size(); ++i) {
      if (people[i].churn) churn += counts[i], ++nc;
      else active += counts[i], ++na;
    }
    return std::pair{nc ? churn / nc : 0.0, na ? active / na : 0.0};
  };
  const Window m1{start_of(add_months(spec.baseline, -1)), start_of(spec.baseline)};
  for (auto [c, a] = means(); c >= a && c > 0.0; std::tie(c, a) = means()) {
    std::size_t top = 0;
    for (std::size_t i = 0; i < people.size(); ++i) {
      if (people[i].churn && (!people[top].churn || counts[i] > counts[top])) top = i;
    }
    auto it = std::find_if(records.rbegin(), records.rend(), [&](const CdrRecord& r) {
      return r.is_interaction() && r.caller == people[top].id && m1.contains(r.timestamp);
    });
    records.erase(std::next(it).base());
    --counts[top];
  }
}

const std::array<std::string_view, 45>& brands() {
  static const std::array<std::string_view, 45> names{
      "Samsung", "Apple",   "Huawei",  "Xiaomi", "Nokia",   "Oppo",    "Vivo",    "Motorola", "LG",
      "Sony",    "Realme",  "OnePlus", "Tecno",  "Infinix", "Itel",    "Alcatel", "ZTE",      "Lenovo",
      "HTC",     "Asus",    "Google",  "Honor",  "Meizu",   "BlackBerry", "Condor", "Lava",   "Micromax",
      "Wiko",    "Gionee",  "Doogee",  "Ulefone", "Blackview", "Cubot", "Oukitel", "Leagoo", "Elephone",
      "Umidigi", "Vertu",   "Siemens", "Philips", "Sharp",  "Kyocera", "Panasonic", "Fairphone", "Energizer"};
  return names;
}

CustomerProfile make_profile(const SyntheticSpec& spec, std::uint64_t seed, std::size_t index, const Person& p) {
  Rng rng(derive_seed(seed, "profile", index));
  CustomerProfile prof;
  prof.id = p.id;
  prof.activation_date = p.activation;
  const int baseline_year = static_cast<int>(std::chrono::year_month_day(spec.baseline).year());
  prof.birth_year = baseline_year - std::clamp(static_cast<int>(std::normal_distribution<double>(38, 12)(rng)), 16, 90);
  if (chance(rng, 0.03)) prof.birth_year.reset();

  auto& a = prof.attributes;
  a.emplace_back("contract_id", fmt::format("K{:08d}", 31 * index + 17));
  const double balance = std::lognormal_distribution<double>(p.churn ? 3.3 : 3.5, 0.8)(rng);
  a.emplace_back("balance", chance(rng, 0.05) ? AttributeValue{} : AttributeValue{std::round(balance * 100) / 100});
  a.emplace_back("gender", chance(rng, 0.02) ? AttributeValue{} : AttributeValue{std::string(chance(rng, 0.55) ? "M" : "F")});
  const double prepaid = p.churn ? 0.65 : 0.55;
  const double u = uniform(rng, 0.0, 1.0);
  a.emplace_back("subscription_type",
                 std::string(u < prepaid ? "PREPAID" : (u < prepaid + 0.35 ? "POSTPAID" : "HYBRID")));
  // Zipf-like brand popularity.
  std::vector<double> weights(brands().size());
  for (std::size_t b = 0; b < weights.size(); ++b) weights[b] = 1.0 / static_cast<double>(b + 1);
  const auto brand = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
  a.emplace_back("device_brand", std::string(brands()[brand]));
  a.emplace_back("device_count", static_cast<double>(1 + poisson(rng, 0.4)));
  a.emplace_back("complaint_count", static_cast<double>(poisson(rng, p.churn ? 0.5 : 0.3)));
  a.emplace_back("legacy_score", chance(rng, 0.85) ? AttributeValue{} : AttributeValue{std::round(uniform(rng, 0, 100))});
  return prof;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.customers == 0) throw Error(ErrorCode::InvalidArgument, "synthetic population must be non-empty");
  if (!(spec.churn_rate > 0.0 && spec.churn_rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "churn_rate must lie in (0,1)");
  }
  if (spec.months < 1) throw Error(ErrorCode::InvalidArgument, "months must be >= 1");

  std::vector<Person> people;
  std::size_t n_competitors = 0, n_landlines = 0;
  build_population(spec, seed, people, n_competitors, n_landlines);

  SyntheticDataset data;
  for (std::size_t i = 0; i < people.size(); ++i) emit_person(spec, seed, i, people, data.records);
  std::stable_sort(data.records.begin(), data.records.end(),
                   [](const CdrRecord& a, const CdrRecord& b) { return a.timestamp < b.timestamp; });
  enforce_final_month_gap(spec, people, data.records);

  data.profiles.reserve(people.size());
  data.labels.reserve(people.size());
  for (std::size_t i = 0; i < people.size(); ++i) {
    data.profiles.push_back(make_profile(spec, seed, i, people[i]));
    data.labels.push_back(LabelRecord{people[i].id, people[i].churn ? Label::Churn : Label::Active});
  }
  return data;
}

void write_synthetic(const SyntheticDataset& data, const SyntheticFiles& files, CdrFormat format) {
  auto write = [](const std::filesystem::path& path, auto&& body) {
    std::ostringstream out;
    body(out);
    atomic_write(path, out.str());
  };
  write(files.cdr, [&](std::ostream& o) { write_cdr(o, data.records, format); });
  write(files.profiles, [&](std::ostream& o) { write_profiles(o, data.profiles); });
  write(files.labels, [&](std::ostream& o) { write_labels(o, data.labels); });
}

}  // namespace churnforge
