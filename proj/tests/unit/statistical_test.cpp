#include <gtest/gtest.h>

#include <cmath>

#include "churnforge/statistical.hpp"

using namespace churnforge;

namespace {

const Date kBaseline = parse_date("2021-10-01");

CustomerProfile profile(const std::string& n, std::optional<int> birth = 1980) {
  CustomerProfile p;
  p.id = {Operator::Home, n};
  p.activation_date = parse_date("2019-01-01");
  p.birth_year = birth;
  p.attributes = {{"balance", 12.5}, {"gender", std::string("F")}};
  return p;
}

CdrRecord call(const std::string& t, CustomerId a, CustomerId b, int dur, bool dropped = false) {
  CdrRecord r;
  r.timestamp = parse_instant(t);
  r.caller = std::move(a);
  r.callee = std::move(b);
  r.kind = EventKind::Call;
  r.duration_s = dur;
  r.dropped = dropped;
  r.cell_id = "C1";
  return r;
}

CdrRecord session(const std::string& t, CustomerId a, RadioAccess rat) {
  CdrRecord r;
  r.timestamp = parse_instant(t);
  r.caller = std::move(a);
  r.kind = EventKind::Data;
  r.bytes_up = 100;
  r.bytes_down = 900;
  r.rat = rat;
  r.cell_id = "C2";
  return r;
}

double cell(const StatisticalFeatures& s, const std::string& column, std::size_t row) {
  const auto* c = s.matrix.find(column);
  if (!c) throw std::runtime_error("missing column " + column);
  return c->numbers.at(row);
}

const CustomerId A{Operator::Home, "a"};
const CustomerId B{Operator::Home, "b"};
const CustomerId X{Operator::Competitor, "x"};

}  // namespace

TEST(Statistical, IdleCustomerGetsZeroAggregates) {
  const std::vector<CustomerProfile> profiles{profile("a"), profile("b")};
  const std::vector<CdrRecord> records{call("2021-09-10T10:00:00Z", B, X, 60)};
  const auto s = statistical_features(records, profiles, 6, kBaseline);
  const auto row = *s.matrix.row_of("HOME:a");
  for (const auto& c : s.matrix.columns()) {
    if (c.name == "days_since_last_outgoing" || c.name == "customer_age" || c.name == "balance" ||
        c.kind != FeatureKind::Numeric) {
      continue;
    }
    EXPECT_EQ(c.numbers[row], 0.0) << c.name;
  }
  EXPECT_DOUBLE_EQ(cell(s, "days_since_last_outgoing", row), months_before(kBaseline, 6).days());
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Statistical, OutgoingCallAggregates) {
  const std::vector<CustomerProfile> profiles{profile("a")};
  const std::vector<CdrRecord> records{
      call("2021-09-02T10:00:00Z", A, B, 60),
      call("2021-09-03T10:00:00Z", A, B, 120),
      call("2021-09-04T10:00:00Z", A, B, 180),
  };
  const auto s = statistical_features(records, profiles, 6, kBaseline);
  EXPECT_EQ(cell(s, "call_out_m1_count", 0), 3);
  EXPECT_EQ(cell(s, "call_out_m1_dur_sum", 0), 360);
  EXPECT_EQ(cell(s, "call_out_m1_dur_mean", 0), 120);
  EXPECT_EQ(cell(s, "call_out_m1_dur_max", 0), 180);
  EXPECT_EQ(cell(s, "call_out_m1_dur_min", 0), 60);
  EXPECT_EQ(cell(s, "call_out_all_count", 0), 3);
  EXPECT_EQ(cell(s, "call_out_m2_count", 0), 0);
  EXPECT_EQ(cell(s, "out_events_m1_w1", 0), 3);
  EXPECT_EQ(cell(s, "active_days_m1", 0), 3);
  EXPECT_EQ(cell(s, "max_daily_out_events_m1", 0), 1);
  EXPECT_DOUBLE_EQ(cell(s, "days_since_last_outgoing", 0), 27.0 - 10.0 / 24.0);
}

TEST(Statistical, MonthsAreCalendarMonthsBeforeBaseline) {
  const std::vector<CustomerProfile> profiles{profile("a")};
  const std::vector<CdrRecord> records{
      call("2021-08-31T23:59:59Z", A, B, 10),
      call("2021-04-01T00:00:00Z", A, B, 20),
      call("2021-03-31T23:59:59Z", A, B, 30),  // outside a 6-month window
  };
  const auto s = statistical_features(records, profiles, 6, kBaseline);
  EXPECT_EQ(cell(s, "call_out_m2_count", 0), 1);
  EXPECT_EQ(cell(s, "call_out_m6_count", 0), 1);
  EXPECT_EQ(cell(s, "call_out_all_count", 0), 2);
  EXPECT_EQ(cell(s, "call_in_all_count", 0), 0);
}

TEST(Statistical, CompetitorShare) {
  const std::vector<CustomerProfile> profiles{profile("a")};
  const std::vector<CdrRecord> records{
      call("2021-09-02T10:00:00Z", A, B, 60),
      call("2021-09-03T10:00:00Z", A, B, 60),
      call("2021-09-04T10:00:00Z", A, B, 60),
      call("2021-09-05T10:00:00Z", A, X, 60),
  };
  const auto s = statistical_features(records, profiles, 6, kBaseline);
  EXPECT_DOUBLE_EQ(cell(s, "pct_competitor_transactions", 0), 0.25);
  EXPECT_EQ(cell(s, "distinct_contacts", 0), 2);
}

TEST(Statistical, NamedBehaviouralFeatures) {
  const std::vector<CustomerProfile> profiles{profile("a", 1990), profile("b", std::nullopt)};
  const std::vector<CdrRecord> records{
      call("2021-07-02T10:00:00Z", A, B, 60, true),
      call("2021-07-03T10:00:00Z", B, A, 60, false),
      session("2021-07-04T10:00:00Z", A, RadioAccess::G2),
      session("2021-07-05T10:00:00Z", A, RadioAccess::G3),
      session("2021-07-06T10:00:00Z", A, RadioAccess::G4),
      session("2021-07-07T10:00:00Z", A, RadioAccess::G4),
  };
  const auto s = statistical_features(records, profiles, 6, kBaseline);
  const auto a = *s.matrix.row_of("HOME:a");
  const auto b = *s.matrix.row_of("HOME:b");
  EXPECT_DOUBLE_EQ(cell(s, "avg_radio_access_type", a), 0.75);
  EXPECT_EQ(cell(s, "dropped_call_count", a), 1);
  EXPECT_EQ(cell(s, "dropped_call_count", b), 1);
  EXPECT_EQ(cell(s, "customer_age", a), 31);
  EXPECT_TRUE(std::isnan(cell(s, "customer_age", b)));
  EXPECT_EQ(cell(s, "data_all_count", a), 4);
  EXPECT_EQ(cell(s, "data_all_bytes_sum", a), 4000);
  EXPECT_EQ(cell(s, "data_bytes_up_sum", a), 400);
  EXPECT_EQ(cell(s, "call_in_all_count", a), 1);
}

TEST(Statistical, ProfileAttributesPassThrough) {
  auto p = profile("a");
  p.attributes.emplace_back("legacy", AttributeValue{});
  const std::vector<CustomerProfile> profiles{p};
  const auto s = statistical_features({}, profiles, 3, kBaseline);
  ASSERT_NE(s.matrix.find("balance"), nullptr);
  EXPECT_EQ(s.matrix.find("balance")->numbers[0], 12.5);
  ASSERT_NE(s.matrix.find("gender"), nullptr);
  EXPECT_EQ(s.matrix.find("gender")->kind, FeatureKind::Categorical);
  EXPECT_EQ(*s.matrix.find("gender")->labels[0], "F");
  EXPECT_TRUE(s.matrix.find("legacy")->missing(0));
}

TEST(Statistical, EmptyWindowWarns) {
  const std::vector<CustomerProfile> profiles{profile("a")};
  const std::vector<CdrRecord> records{call("2022-01-02T10:00:00Z", A, B, 60)};
  const auto s = statistical_features(records, profiles, 6, kBaseline);
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("no CDR records"), std::string::npos);
  EXPECT_EQ(cell(s, "call_out_all_count", 0), 0);
}

TEST(Statistical, SmsAndMmsCarryCountsOnly) {
  const auto s = statistical_features({}, std::vector<CustomerProfile>{profile("a")}, 2, kBaseline);
  EXPECT_NE(s.matrix.find("sms_out_m1_count"), nullptr);
  EXPECT_EQ(s.matrix.find("sms_out_m1_dur_sum"), nullptr);
  EXPECT_NE(s.matrix.find("mms_in_all_count"), nullptr);
  EXPECT_EQ(s.matrix.find("call_out_m3_count"), nullptr);
}
