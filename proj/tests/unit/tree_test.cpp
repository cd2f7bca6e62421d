#include <gtest/gtest.h>

#include <limits>
#include <numeric>

#include "churnforge/error.hpp"
#include "churnforge/tree.hpp"
#include "fixtures.hpp"

using namespace churnforge;

namespace {

TrainingMatrix numeric_matrix(const std::vector<std::vector<double>>& cols) {
  TrainingMatrix m;
  m.columns = cols;
  m.kinds.assign(cols.size(), FeatureKind::Numeric);
  return m;
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> r(n);
  std::iota(r.begin(), r.end(), 0u);
  return r;
}

double mean_leaf(const RowStat& s) { return s.w > 0 ? s.a / s.w : 0.0; }

}  // namespace

TEST(Tree, NumericSplitUsesMidpoint) {
  const auto m = numeric_matrix({{1, 2, 3, 10, 11, 12}});
  const FeatureIndex index(m);
  std::vector<RowStat> stats;
  for (double y : {0, 0, 0, 1, 1, 1}) stats.push_back({1, y, 0});
  GrowthParams gp;
  const auto out = grow_tree(index, stats, all_rows(6), gp, mean_leaf);
  ASSERT_EQ(out.tree.nodes.size(), 3u);
  EXPECT_EQ(out.tree.nodes[0].feature, 0);
  EXPECT_EQ(out.tree.nodes[0].threshold, 6.5);
  EXPECT_EQ(out.tree.depth(), 1);
  EXPECT_EQ(out.tree.leaf_count(), 2u);
  EXPECT_EQ(out.tree.predict(std::vector<double>{2.0}), 0.0);
  EXPECT_EQ(out.tree.predict(std::vector<double>{7.0}), 1.0);
  EXPECT_GT(out.feature_gain[0], 0.0);
}

TEST(Tree, CategoricalSplitGroupsByRate) {
  TrainingMatrix m;
  m.columns = {{0, 1, 2, 0, 1, 2, 3, 3}};
  m.kinds = {FeatureKind::Categorical};
  const FeatureIndex index(m);
  std::vector<RowStat> stats;
  for (double y : {1, 0, 1, 1, 0, 1, 0, 0}) stats.push_back({1, y, 0});
  const auto out = grow_tree(index, stats, all_rows(8), GrowthParams{}, mean_leaf);
  ASSERT_GE(out.tree.nodes.size(), 3u);
  const auto& root = out.tree.nodes[0];
  EXPECT_TRUE(root.categorical);
  // Codes 1 and 3 never churn; they go left together.
  EXPECT_EQ(root.left_categories, (1u << 1) | (1u << 3));
  EXPECT_EQ(out.tree.predict(std::vector<double>{2.0}), 1.0);
  EXPECT_EQ(out.tree.predict(std::vector<double>{-1.0}), 1.0);  // unknown code goes right
}

TEST(Tree, BestFirstWithoutCapMatchesLevelwise) {
  // Level-wise growth is used only when there is no node cap; a cap too large
  // to bind must give the same tree.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = fixtures::toy_dataset(300, 5, seed);
    const auto m = encode(ds.matrix);
    const FeatureIndex index(m);
    std::vector<RowStat> stats;
    for (auto l : ds.labels) stats.push_back({1, l == Label::Churn ? 1.0 : 0.0, 0});
    GrowthParams gp;
    gp.max_depth = 8;
    gp.allow_zero_gain = true;
    gp.min_child_weight = 1;
    const auto level = grow_tree(index, stats, all_rows(ds.size()), gp, mean_leaf);
    gp.max_nodes = 1u << 30;
    const auto best = grow_tree(index, stats, all_rows(ds.size()), gp, mean_leaf);
    EXPECT_EQ(level.tree, best.tree) << "seed " << seed;
  }
}

TEST(Tree, NodeCapIsRespected) {
  const auto ds = fixtures::toy_dataset(400, 4, 3);
  const auto m = encode(ds.matrix);
  const FeatureIndex index(m);
  std::vector<RowStat> stats;
  for (auto l : ds.labels) stats.push_back({1, l == Label::Churn ? 1.0 : 0.0, 0});
  GrowthParams gp;
  gp.max_depth = 20;
  gp.max_nodes = 15;
  gp.allow_zero_gain = true;
  const auto out = grow_tree(index, stats, all_rows(ds.size()), gp, mean_leaf);
  EXPECT_LE(out.tree.nodes.size(), 15u);
  EXPECT_EQ(out.tree.nodes.size() % 2, 1u);
}

TEST(Tree, RowSubsetOnlySeesItsRows) {
  const auto m = numeric_matrix({{1, 2, 3, 4, 5, 6}});
  const FeatureIndex index(m);
  std::vector<RowStat> stats;
  for (double y : {0, 1, 0, 1, 1, 1}) stats.push_back({1, y, 0});
  const std::vector<std::uint32_t> rows{3, 4, 5};
  const auto out = grow_tree(index, stats, rows, GrowthParams{}, mean_leaf);
  ASSERT_EQ(out.tree.nodes.size(), 1u);
  EXPECT_EQ(out.tree.nodes[0].value, 1.0);
}

TEST(Tree, RejectsEmptyRows) {
  const auto m = numeric_matrix({{1, 2}});
  const FeatureIndex index(m);
  std::vector<RowStat> stats(2);
  EXPECT_THROW(grow_tree(index, stats, {}, GrowthParams{}, mean_leaf), Error);
}

TEST(Encode, UnknownCategoryIsMinusOne) {
  FeatureMatrix fm(std::vector<std::string>{"HOME:a", "HOME:b"});
  auto c = FeatureColumn::categorical("plan", {std::string("x"), std::string("zz")});
  c.categories = {"Other", "x"};
  fm.add_column(c);
  const auto t = encode(fm);
  EXPECT_EQ(t.columns[0], (std::vector<double>{1.0, -1.0}));
}

TEST(Encode, TooManyCategoriesThrows) {
  FeatureMatrix fm(std::vector<std::string>{"HOME:a"});
  auto c = FeatureColumn::categorical("plan", {std::string("c0")});
  for (int i = 0; i < 65; ++i) c.categories.push_back("c" + std::to_string(i));
  fm.add_column(c);
  EXPECT_THROW(encode(fm), Error);
}

TEST(FeatureIndexOrder, MissingValuesSortLast) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto m = numeric_matrix({{3, nan, 1, 2}});
  const FeatureIndex index(m);
  const auto order = index.order(0);
  EXPECT_EQ(std::vector<std::uint32_t>(order.begin(), order.end()), (std::vector<std::uint32_t>{2, 3, 0, 1}));
  EXPECT_EQ(index.rank(0)[1], 3u);
}
