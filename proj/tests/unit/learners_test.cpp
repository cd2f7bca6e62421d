#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "churnforge/error.hpp"
#include "churnforge/evaluation.hpp"
#include "churnforge/learners.hpp"
#include "fixtures.hpp"
#include "xgb_oracle.hpp"

using namespace churnforge;

namespace {

LabeledDataset from_columns(const std::vector<std::vector<double>>& cols, const std::vector<int>& y) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < y.size(); ++i) ids.push_back("HOME:" + std::to_string(i));
  LabeledDataset ds;
  ds.matrix = FeatureMatrix(ids);
  for (std::size_t f = 0; f < cols.size(); ++f) ds.matrix.add_column(FeatureColumn::numeric("x" + std::to_string(f), cols[f]));
  for (int v : y) ds.labels.push_back(v ? Label::Churn : Label::Active);
  return ds;
}

/// 95 ACTIVE rows then 5 CHURN rows.
LabeledDataset imbalanced(std::size_t active = 95, std::size_t churn = 5) {
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < active + churn; ++i) {
    x.push_back(static_cast<double>(i));
    y.push_back(i >= active);
  }
  return from_columns({x}, y);
}

double accuracy(const TrainedModel& m, const LabeledDataset& ds) {
  const auto p = predict(m, ds.matrix);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += (p[i] > 0.5) == (ds.labels[i] == Label::Churn);
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

Hyperparameters dt_params() { return default_hyperparameters(LearnerKind::DecisionTree); }

}  // namespace

TEST(Split, StratifiedSeventyThirty) {
  const auto ds = imbalanced();
  const auto s = split_indices(ds.matrix.ids(), ds.labels, 0.7, 42);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.test.size(), 30u);
  std::size_t churn = 0;
  for (auto i : s.train) churn += ds.labels[i] == Label::Churn;
  EXPECT_TRUE(churn == 3 || churn == 4) << churn;
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
  const auto again = split_indices(ds.matrix.ids(), ds.labels, 0.7, 42);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
}

TEST(Split, FractionMustBeOpenInterval) {
  const auto ds = imbalanced();
  EXPECT_THROW(split_indices(ds.matrix.ids(), ds.labels, 1.0, 1), Error);
  EXPECT_THROW(split_indices(ds.matrix.ids(), ds.labels, 0.0, 1), Error);
  const auto tiny = imbalanced(10, 1);
  EXPECT_THROW(split_indices(tiny.matrix.ids(), tiny.labels, 0.7, 1), Error);
}

TEST(Resample, OversampleBalances) {
  const auto out = resample(imbalanced(), SamplingMode::Oversample, 3);
  EXPECT_EQ(out.count(Label::Active), 95u);
  EXPECT_EQ(out.count(Label::Churn), 95u);
}

TEST(Resample, UndersampleKeepsOriginalRows) {
  const auto ds = imbalanced();
  const auto out = resample(ds, SamplingMode::Undersample, 3);
  EXPECT_EQ(out.count(Label::Active), 5u);
  EXPECT_EQ(out.count(Label::Churn), 5u);
  const std::set<std::string> original(ds.matrix.ids().begin(), ds.matrix.ids().end());
  for (const auto& id : out.matrix.ids()) EXPECT_TRUE(original.count(id));
  const std::set<std::string> unique(out.matrix.ids().begin(), out.matrix.ids().end());
  EXPECT_EQ(unique.size(), out.size());
}

TEST(Resample, BalancedInputAndNoneAreIdentity) {
  const auto ds = imbalanced(6, 6);
  for (auto mode : {SamplingMode::Oversample, SamplingMode::Undersample}) {
    const auto out = resample(ds, mode, 1);
    EXPECT_EQ(out.count(Label::Active), 6u);
    EXPECT_EQ(out.count(Label::Churn), 6u);
  }
  const auto skewed = imbalanced();
  const auto none = resample(skewed, SamplingMode::None, 1);
  EXPECT_EQ(none.matrix.ids(), skewed.matrix.ids());
  EXPECT_EQ(none.labels, skewed.labels);
}

TEST(Resample, DeterministicPerSeed) {
  const auto ds = imbalanced();
  EXPECT_EQ(resample(ds, SamplingMode::Undersample, 5).matrix.ids(),
            resample(ds, SamplingMode::Undersample, 5).matrix.ids());
  EXPECT_NE(resample(ds, SamplingMode::Undersample, 5).matrix.ids(),
            resample(ds, SamplingMode::Undersample, 6).matrix.ids());
}

TEST(DecisionTree, SeparableDataNeedsOneSplit) {
  const auto ds = from_columns({{1, 2, 3, 4, 5, 6}}, {0, 0, 0, 1, 1, 1});
  const auto m = train_decision_tree(ds, dt_params());
  EXPECT_EQ(m.trees[0].depth(), 1);
  EXPECT_EQ(accuracy(m, ds), 1.0);
}

TEST(DecisionTree, ConstantFeaturesGiveThePrior) {
  const auto ds = from_columns({{7, 7, 7, 7}}, {0, 1, 0, 0});
  const auto m = train_decision_tree(ds, dt_params());
  ASSERT_EQ(m.trees[0].nodes.size(), 1u);
  for (double p : predict(m, ds.matrix)) EXPECT_EQ(p, 0.25);
}

TEST(DecisionTree, XorNeedsTwoLevels) {
  const auto ds = from_columns({{0, 0, 1, 1}, {0, 1, 0, 1}}, {0, 1, 1, 0});
  // No single threshold on either feature separates XOR.
  for (int f = 0; f < 2; ++f) {
    auto stump = dt_params();
    stump.max_depth = 1;
    const auto one = from_columns({f == 0 ? std::vector<double>{0, 0, 1, 1} : std::vector<double>{0, 1, 0, 1}},
                                  {0, 1, 1, 0});
    EXPECT_LT(accuracy(train_decision_tree(one, stump), one), 1.0);
  }
  const auto m = train_decision_tree(ds, dt_params());
  EXPECT_EQ(m.trees[0].depth(), 2);
  EXPECT_EQ(accuracy(m, ds), 1.0);
}

TEST(DecisionTree, RowOrderDoesNotMatter) {
  const auto ds = fixtures::toy_dataset(250, 4, 11);
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(2);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto shuffled = ds.select_rows(perm);
  EXPECT_EQ(train_decision_tree(ds, dt_params()).trees, train_decision_tree(shuffled, dt_params()).trees);
}

TEST(DecisionTree, NodeCapHolds) {
  const auto ds = fixtures::toy_dataset(3000, 6, 12);
  const auto m = train_decision_tree(ds, dt_params());
  EXPECT_LE(m.trees[0].nodes.size(), 398u);
  EXPECT_LE(m.trees[0].depth(), 20);
}

TEST(RandomForest, OneTreeWithoutBootstrapIsADecisionTree) {
  const auto ds = fixtures::toy_dataset(200, 5, 4);
  auto h = dt_params();
  h.bootstrap = false;
  h.max_features = 1.0;
  const auto forest = train_random_forest(ds, h, 9);
  const auto tree = train_decision_tree(ds, h);
  EXPECT_EQ(forest.trees, tree.trees);
  EXPECT_EQ(predict(forest, ds.matrix), predict(tree, ds.matrix));
}

TEST(RandomForest, SeededAndThreadIndependent) {
  const auto ds = fixtures::toy_dataset(200, 6, 5);
  auto h = default_hyperparameters(LearnerKind::RandomForest);
  h.n_trees = 12;
  const auto a = train_random_forest(ds, h, 3, 1);
  const auto b = train_random_forest(ds, h, 3, 4);
  EXPECT_EQ(a.trees, b.trees);
  EXPECT_NE(a.trees, train_random_forest(ds, h, 4, 1).trees);
}

TEST(RandomForest, BootstrapTreesDisagree) {
  const auto ds = fixtures::toy_dataset(300, 6, 6);
  auto h = default_hyperparameters(LearnerKind::RandomForest);
  h.n_trees = 5;
  const auto m = train_random_forest(ds, h, 1);
  const auto x = encode(ds.matrix, m.schema);
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = x.row(i);
    disagreements += m.trees[0].predict(row) != m.trees[1].predict(row);
  }
  EXPECT_GT(disagreements, 0u);
}

TEST(Gbm, ZeroTreesPredictsPrior) {
  const auto ds = from_columns({{1, 2, 3, 4}}, {1, 0, 0, 0});
  auto h = default_hyperparameters(LearnerKind::Gbm);
  h.n_trees = 0;
  const auto m = train_gbm(ds, h);
  EXPECT_DOUBLE_EQ(m.base_score, std::log(0.25 / 0.75));
  for (double p : predict(m, ds.matrix)) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Boosting, LossNeverIncreases) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto ds = fixtures::toy_dataset(300, 4, seed);
    for (auto kind : {LearnerKind::Gbm, LearnerKind::XgbStyle}) {
      auto h = default_hyperparameters(kind);
      h.n_trees = 40;
      h.learning_rate = 0.3;
      TrainingTrace trace;
      kind == LearnerKind::Gbm ? train_gbm(ds, h, &trace) : train_xgb_style(ds, h, &trace);
      ASSERT_EQ(trace.loss.size(), 41u);
      for (std::size_t k = 1; k < trace.loss.size(); ++k) EXPECT_LE(trace.loss[k], trace.loss[k - 1]) << k;
    }
  }
}

TEST(Gbm, LearnsAThresholdConcept) {
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i);
    y.push_back(i >= 29);
  }
  const auto ds = from_columns({x}, y);
  auto h = default_hyperparameters(LearnerKind::Gbm);
  h.n_trees = 50;
  const auto m = train_gbm(ds, h);
  EXPECT_EQ(roc_auc(predict(m, ds.matrix), ds.labels).auc, 1.0);
}

TEST(Xgb, HugeLambdaGivesConstantModel) {
  const auto ds = fixtures::toy_dataset(150, 3, 8);
  auto h = default_hyperparameters(LearnerKind::XgbStyle);
  h.n_trees = 5;
  h.lambda = 1e15;
  const auto m = train_xgb_style(ds, h);
  const auto p = predict(m, ds.matrix);
  for (double v : p) EXPECT_NEAR(v, p.front(), 1e-9);
  for (double g : m.feature_gain) EXPECT_LT(g, 1e-9);
}

TEST(Xgb, StumpMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto ds = fixtures::toy_dataset(60 + 10 * seed, 4, 100 + seed);
    std::vector<std::vector<double>> cols;
    for (const auto& c : ds.matrix.columns()) cols.push_back(c.numbers);
    std::vector<int> y;
    for (auto l : ds.labels) y.push_back(l == Label::Churn);
    const auto want = oracle::best_stump(cols, y, 0.0, 0.0, 0.0);

    Hyperparameters h = default_hyperparameters(LearnerKind::XgbStyle);
    h.n_trees = 1;
    h.max_depth = 1;
    h.lambda = 0;
    h.gamma = 0;
    h.min_child_weight = 0;
    const auto m = train_xgb_style(ds, h);
    const auto& root = m.trees[0].nodes[0];
    ASSERT_EQ(root.feature, want.feature) << "seed " << seed;
    EXPECT_NEAR(root.threshold, want.threshold, 1e-12);
    EXPECT_NEAR(m.feature_gain[static_cast<std::size_t>(want.feature)], want.gain, 1e-9 * want.gain);
    const auto ranking = feature_importance(m);
    ASSERT_EQ(ranking.size(), 1u);
    EXPECT_EQ(ranking[0].feature, "f" + std::to_string(want.feature));
    EXPECT_EQ(ranking[0].share, 1.0);
  }
}

TEST(Xgb, UnusedFeatureHasNoGain) {
  // Six rows per side keep each child above the default hessian floor of 1.
  std::vector<double> x, flat(12, 5.0);
  std::vector<int> y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(i);
    y.push_back(i >= 6);
  }
  const auto ds = from_columns({x, flat}, y);
  const auto m = train_xgb_style(ds, default_hyperparameters(LearnerKind::XgbStyle));
  EXPECT_GT(m.feature_gain[0], 0.0);
  EXPECT_EQ(m.feature_gain[1], 0.0);
}

TEST(Model, JsonRoundTripIsBitExact) {
  auto ds = fixtures::toy_dataset(200, 4, 21);
  auto cat = FeatureColumn::categorical("plan", {});
  for (std::size_t i = 0; i < ds.size(); ++i) cat.labels.push_back(i % 3 == 0 ? "a" : (i % 3 == 1 ? "b" : "Other"));
  cat.categories = {"a", "b", "Other"};
  ds.matrix.add_column(cat);
  for (auto kind : {LearnerKind::DecisionTree, LearnerKind::RandomForest, LearnerKind::Gbm, LearnerKind::XgbStyle}) {
    auto h = default_hyperparameters(kind);
    h.n_trees = std::min(h.n_trees, 15);
    const auto m = train(ds, kind, h, 77);
    const auto back = TrainedModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_EQ(back.trees, m.trees);
    EXPECT_EQ(predict(back, ds.matrix), predict(m, ds.matrix)) << to_string(kind);
    EXPECT_EQ(back.to_json().dump(), m.to_json().dump());
  }
}

TEST(Model, SchemaMismatchIsFatal) {
  const auto ds = fixtures::toy_dataset(50, 2, 1);
  const auto m = train_decision_tree(ds, dt_params());
  FeatureMatrix other(ds.matrix.ids());
  other.add_column(FeatureColumn::numeric("f0", ds.matrix.column(0).numbers));
  try {
    predict(m, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
  auto tampered = m.to_json();
  tampered["schema_hash"] = "0";
  EXPECT_THROW(TrainedModel::from_json(tampered), Error);
}

TEST(Model, EmptyMatrixAndSingleLeaf) {
  const auto ds = fixtures::toy_dataset(50, 2, 1);
  auto m = train_decision_tree(ds, dt_params());
  m.trees = {Tree{{TreeNode{.value = 0.3}}}};
  for (double p : predict(m, ds.matrix)) EXPECT_EQ(p, 0.3);
  const auto empty = ds.matrix.select_rows(std::vector<std::size_t>{});
  EXPECT_TRUE(predict(m, empty).empty());
}

TEST(CrossValidate, TwoFoldsOnTenRows) {
  const auto ds = imbalanced(5, 5);
  const auto folds = stratified_folds(ds.matrix.ids(), ds.labels, 2, 1);
  std::map<int, std::pair<int, int>> per;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    auto& p = per[folds[i]];
    (ds.labels[i] == Label::Churn ? p.first : p.second) += 1;
  }
  ASSERT_EQ(per.size(), 2u);
  for (const auto& [f, counts] : per) {
    EXPECT_EQ(counts.first + counts.second, 5);
    EXPECT_GE(counts.first, 2);
    EXPECT_GE(counts.second, 2);
  }
}

TEST(CrossValidate, SinglePointGridIsReturned) {
  const auto ds = fixtures::toy_dataset(120, 3, 2);
  auto h = default_hyperparameters(LearnerKind::XgbStyle);
  h.n_trees = 5;
  const std::vector<Hyperparameters> grid{h};
  const auto cv = cross_validate(ds, LearnerKind::XgbStyle, grid, 3, SamplingMode::None, 4);
  EXPECT_EQ(cv.best, h);
  EXPECT_EQ(cv.best_fold_aucs.size(), 3u);
  EXPECT_EQ(cv.points.size(), 1u);
}

TEST(CrossValidate, DominantPointWins) {
  const auto ds = fixtures::toy_dataset(200, 3, 3);
  auto weak = default_hyperparameters(LearnerKind::XgbStyle);
  weak.n_trees = 3;
  weak.gamma = 1e9;  // no split pays for itself: every fold AUC is 0.5
  auto strong = weak;
  strong.gamma = 0.0;
  strong.n_trees = 10;
  const std::vector<Hyperparameters> grid{weak, strong};
  const auto cv = cross_validate(ds, LearnerKind::XgbStyle, grid, 4, SamplingMode::None, 4);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_GT(cv.points[1].fold_aucs[f], cv.points[0].fold_aucs[f]);
  EXPECT_EQ(cv.best, strong);
}

TEST(CrossValidate, TiesPreferSmallerModels) {
  const auto ds = fixtures::toy_dataset(120, 3, 3);
  auto big = default_hyperparameters(LearnerKind::XgbStyle);
  big.gamma = 1e9;
  big.n_trees = 6;
  auto small = big;
  small.n_trees = 2;
  const std::vector<Hyperparameters> grid{big, small};
  EXPECT_EQ(cross_validate(ds, LearnerKind::XgbStyle, grid, 2, SamplingMode::None, 1).best, small);
}

TEST(CrossValidate, RejectsTooManyFolds) {
  const auto ds = imbalanced(20, 3);
  const std::vector<Hyperparameters> grid{dt_params()};
  EXPECT_THROW(cross_validate(ds, LearnerKind::DecisionTree, grid, 4, SamplingMode::None, 1), Error);
  EXPECT_THROW(cross_validate(ds, LearnerKind::DecisionTree, grid, 1, SamplingMode::None, 1), Error);
}
