#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "churnforge/dataset.hpp"
#include "churnforge/error.hpp"
#include "churnforge/statistical.hpp"
#include "churnforge/synthetic.hpp"
#include "fixtures.hpp"

using namespace churnforge;

namespace {

const Date kBaseline = parse_date("2021-10-01");

FeatureMatrix stat_matrix(const std::vector<std::string>& ids) {
  FeatureMatrix m(ids);
  std::vector<double> v;
  for (std::size_t i = 0; i < ids.size(); ++i) v.push_back(static_cast<double>(i) + 1);
  m.add_column(FeatureColumn::numeric("call_out_all_count", v));
  return m;
}

SnaFeatureRow sna_row(const std::string& n) {
  SnaFeatureRow r;
  r.id = {Operator::Home, n};
  r.in_degree = 2;
  r.pr_duration = 0.9;
  return r;
}

CustomerProfile profile(const std::string& n, const std::string& activated) {
  CustomerProfile p;
  p.id = {Operator::Home, n};
  p.activation_date = parse_date(activated);
  p.attributes = {{"call_out_all_count", 77.0}};
  return p;
}

}  // namespace

TEST(Merge, AbsentFromGraphGetsIsolatedDefaults) {
  const auto m = merge(stat_matrix({"HOME:a", "HOME:b"}), std::vector<SnaFeatureRow>{sna_row("a")}, {});
  const auto b = *m.row_of("HOME:b");
  EXPECT_EQ(m.find("pr_duration")->numbers[b], 1.0 - 0.85);
  EXPECT_EQ(m.find("in_degree")->numbers[b], 0.0);
  EXPECT_EQ(m.find("pr_duration")->numbers[*m.row_of("HOME:a")], 0.9);
}

TEST(Merge, DisjointIdsGiveUnion) {
  const std::vector<CustomerProfile> profiles{profile("z", "2019-01-01")};
  const auto m = merge(stat_matrix({"HOME:a"}), std::vector<SnaFeatureRow>{sna_row("z")}, profiles);
  EXPECT_EQ(m.ids(), (std::vector<std::string>{"HOME:a", "HOME:z"}));
  // Graph-only rows take profile passthrough values where the name matches.
  EXPECT_EQ(m.find("call_out_all_count")->numbers[1], 77.0);
  EXPECT_EQ(m.find("in_degree")->numbers[1], 2.0);
}

TEST(Merge, NameCollisionIsFatal) {
  auto stat = stat_matrix({"HOME:a"});
  stat.add_column(FeatureColumn::numeric("pr_duration", {1.0}));
  try {
    merge(stat, std::vector<SnaFeatureRow>{sna_row("a")}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaCollision);
  }
}

TEST(Merge, CompetitorRowsAreNotCustomers) {
  SnaFeatureRow r = sna_row("q");
  r.id.op = Operator::Competitor;
  const auto m = merge(stat_matrix({"HOME:a"}), std::vector<SnaFeatureRow>{r}, {});
  EXPECT_EQ(m.row_count(), 1u);
}

TEST(Assemble, RecentActivationsAreExcluded) {
  const auto m = stat_matrix({"HOME:new", "HOME:old", "HOME:edge"});
  const std::vector<CustomerProfile> profiles{profile("new", "2021-08-01"), profile("old", "2021-05-01"),
                                              profile("edge", "2021-06-01")};
  const std::vector<LabelRecord> labels{{{Operator::Home, "old"}, Label::Churn}};
  const auto ds = assemble(m, labels, profiles, kBaseline, 4);
  EXPECT_EQ(ds.matrix.ids(), std::vector<std::string>{"HOME:old"});
  EXPECT_EQ(ds.labels, std::vector<Label>{Label::Churn});
  EXPECT_EQ(ds.baseline, kBaseline);
}

TEST(Assemble, MissingLabelIsFatal) {
  const auto m = stat_matrix({"HOME:old"});
  const std::vector<CustomerProfile> profiles{profile("old", "2020-01-01")};
  try {
    assemble(m, {}, profiles, kBaseline);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLabel);
  }
}

TEST(Assemble, SyntheticChurnShareNearConfigured) {
  const SyntheticSpec spec;
  const auto data = generate_synthetic(spec, 7);
  const auto stat = statistical_features(data.records, data.profiles, 6, spec.baseline);
  const auto ds = assemble(stat.matrix, data.labels, data.profiles, spec.baseline, 4);
  const double share = static_cast<double>(ds.count(Label::Churn)) / static_cast<double>(ds.size());
  EXPECT_NEAR(share, 0.05, 0.005);
  EXPECT_LT(ds.size(), data.labels.size());
}

TEST(FeatureMatrixIo, CsvAndSchemaRoundTrip) {
  FeatureMatrix m(std::vector<std::string>{"HOME:a", "HOME:b", "HOME:c"});
  m.add_column(FeatureColumn::numeric("x", {1.5, std::numeric_limits<double>::quiet_NaN(), 0.1}));
  auto cat = FeatureColumn::categorical("plan", {std::string("p,q"), std::nullopt, std::string("r")});
  m.add_column(cat);
  std::ostringstream out;
  write_matrix_csv(out, m);
  std::istringstream in(out.str());
  const auto back = read_matrix_csv(in, schema_to_json(m));
  EXPECT_EQ(back.ids(), m.ids());
  EXPECT_EQ(back.column(0).numbers[0], 1.5);
  EXPECT_TRUE(std::isnan(back.column(0).numbers[1]));
  EXPECT_EQ(back.column(0).numbers[2], 0.1);
  EXPECT_EQ(back.column(1).labels, m.column(1).labels);
  EXPECT_EQ(schema_hash(back), schema_hash(m));
}

TEST(FeatureMatrixIo, SchemaHashTracksCategories) {
  FeatureMatrix a(std::vector<std::string>{"HOME:a"});
  auto c = FeatureColumn::categorical("plan", {std::string("x")});
  c.categories = {"x", "Other"};
  a.add_column(c);
  FeatureMatrix b = a;
  b.columns()[0].categories = {"y", "Other"};
  EXPECT_NE(schema_hash(a), schema_hash(b));
}

TEST(FeatureMatrixIo, DatasetRoundTrip) {
  fixtures::TempDir dir("dataset");
  auto ds = fixtures::toy_dataset(30, 3, 9);
  ds.baseline = kBaseline;
  write_dataset(ds, dir.path() / "d.csv", dir.path() / "d.schema.json");
  const auto back = read_dataset(dir.path() / "d.csv", dir.path() / "d.schema.json");
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.baseline, ds.baseline);
  EXPECT_EQ(back.matrix.ids(), ds.matrix.ids());
  for (std::size_t j = 0; j < ds.matrix.column_count(); ++j) {
    EXPECT_EQ(back.matrix.column(j).numbers, ds.matrix.column(j).numbers);
  }
}

TEST(FeatureMatrixIo, ValidationCatchesBadShapes) {
  FeatureMatrix m(std::vector<std::string>{"HOME:a", "HOME:b"});
  EXPECT_THROW(m.add_column(FeatureColumn::numeric("x", {1.0})), Error);
  m.add_column(FeatureColumn::numeric("x", {1.0, 2.0}));
  EXPECT_THROW(m.add_column(FeatureColumn::numeric("x", {1.0, 2.0})), Error);
  EXPECT_NO_THROW(m.validate());
}
