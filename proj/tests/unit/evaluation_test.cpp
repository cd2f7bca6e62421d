#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "churnforge/error.hpp"
#include "churnforge/evaluation.hpp"
#include "churnforge/experiment.hpp"
#include "churnforge/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace churnforge;

namespace {

std::vector<Label> labels_of(const std::vector<int>& y) {
  std::vector<Label> out;
  for (int v : y) out.push_back(v ? Label::Churn : Label::Active);
  return out;
}

struct Scored {
  std::vector<double> scores;
  std::vector<int> y;
};

Scored random_scores(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> level(0, 20);  // coarse levels force ties
  std::bernoulli_distribution churn(0.3);
  Scored s;
  for (std::size_t i = 0; i < n; ++i) {
    s.y.push_back(churn(rng));
    s.scores.push_back(level(rng) + 2 * s.y.back());  // small integers: exact and distinct
  }
  s.y[0] = 1;
  s.y[1] = 0;
  return s;
}

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.customers = 1500;
  spec.months = 6;
  spec.churn_rate = 0.1;
  return spec;
}

}  // namespace

TEST(Auc, WorkedExamples) {
  const std::vector<double> perfect{0.9, 0.8, 0.2, 0.1};
  EXPECT_EQ(roc_auc(perfect, labels_of({1, 1, 0, 0})).auc, 1.0);
  const std::vector<double> mixed{0.9, 0.4, 0.6, 0.1};
  EXPECT_EQ(roc_auc(mixed, labels_of({1, 1, 0, 0})).auc, 0.75);
  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  EXPECT_EQ(roc_auc(flat, labels_of({1, 0, 1, 0})).auc, 0.5);
}

TEST(Auc, SingleClassThrows) {
  const std::vector<double> s{0.1, 0.2};
  EXPECT_THROW(roc_auc(s, labels_of({1, 1})), Error);
  EXPECT_THROW(roc_auc(s, labels_of({0, 0})), Error);
}

TEST(Auc, MatchesPairCounting) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_scores(rng, 2 + t * 13);
    const auto roc = roc_auc(s.scores, labels_of(s.y));
    EXPECT_NEAR(roc.auc, oracle::auc_pairs(s.scores, s.y), 1e-12);
    EXPECT_NEAR(roc.trapezoid_area(), roc.auc, 1e-12);
  }
}

TEST(Auc, MonotoneTransformInvariant) {
  std::mt19937_64 rng(6);
  const auto s = random_scores(rng, 300);
  std::vector<double> warped;
  for (double v : s.scores) warped.push_back(std::exp(v / 4) - 7);
  EXPECT_EQ(roc_auc(warped, labels_of(s.y)).auc, roc_auc(s.scores, labels_of(s.y)).auc);
}

TEST(Auc, NegatedScoresGiveComplement) {
  std::mt19937_64 rng(7);
  const auto s = random_scores(rng, 300);
  std::vector<double> neg;
  for (double v : s.scores) neg.push_back(-v);
  EXPECT_NEAR(roc_auc(neg, labels_of(s.y)).auc, 1.0 - roc_auc(s.scores, labels_of(s.y)).auc, 1e-12);
}

TEST(Roc, CurveRunsCornerToCorner) {
  std::mt19937_64 rng(8);
  const auto s = random_scores(rng, 100);
  const auto roc = roc_auc(s.scores, labels_of(s.y));
  ASSERT_GE(roc.points.size(), 2u);
  EXPECT_EQ(roc.points.front().fpr, 0.0);
  EXPECT_EQ(roc.points.front().tpr, 0.0);
  EXPECT_TRUE(std::isinf(roc.points.front().threshold));
  EXPECT_EQ(roc.points.back().fpr, 1.0);
  EXPECT_EQ(roc.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
    EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
    EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
  }
}

TEST(Roc, CsvAndSvg) {
  const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
  const auto roc = roc_auc(s, labels_of({1, 1, 0, 0}));
  std::ostringstream out;
  write_roc_csv(out, roc);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "fpr,tpr,threshold");
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  EXPECT_EQ(lines, roc.points.size() + 1);
  const std::vector<std::pair<std::string, RocCurve>> curves{{"XGB", roc}};
  const auto svg = roc_svg(curves);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("XGB"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Importance, SharesSumToOne) {
  const auto ds = fixtures::toy_dataset(400, 5, 3);
  auto h = default_hyperparameters(LearnerKind::XgbStyle);
  h.n_trees = 20;
  const auto ranking = feature_importance(train_xgb_style(ds, h));
  ASSERT_FALSE(ranking.empty());
  double total = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    total += ranking[i].share;
    EXPECT_GT(ranking[i].gain, 0.0);
    if (i > 0) {
      EXPECT_GE(ranking[i - 1].gain, ranking[i].gain);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(ranking[0].feature, "f0");
}

TEST(Importance, SingleLeafHasNone) {
  const auto ds = fixtures::toy_dataset(50, 2, 1);
  auto h = default_hyperparameters(LearnerKind::XgbStyle);
  h.n_trees = 0;
  EXPECT_TRUE(feature_importance(train_xgb_style(ds, h)).empty());
}

TEST(Experiment, OneCellGridIsReproducible) {
  const auto spec = small_spec();
  const auto data = generate_synthetic(spec, 3);
  ExperimentConfig config;
  config.feature_sets = {FeatureSet::Statistical};
  config.algorithms = {LearnerKind::XgbStyle};
  config.samplings = {SamplingMode::None};
  config.sweep_families = {FeatureSet::Sna};
  config.sweep_months = {2};
  config.hyperparameters[LearnerKind::XgbStyle] = [] {
    auto h = default_hyperparameters(LearnerKind::XgbStyle);
    h.n_trees = 30;
    return h;
  }();
  config.config_hash = "test";
  const ExperimentData input{data.records, data.profiles, data.labels, spec.baseline};
  const auto a = run_experiment_grid(config, input);
  ASSERT_EQ(a.cells.size(), 1u);
  ASSERT_EQ(a.sweep.size(), 1u);
  EXPECT_GT(a.cells[0].auc, 0.5);
  EXPECT_EQ(a.cells[0].config_hash, "test");
  EXPECT_NE(a.find(FeatureSet::Statistical, LearnerKind::XgbStyle, SamplingMode::None), nullptr);
  EXPECT_EQ(a.find(FeatureSet::Sna, LearnerKind::XgbStyle, SamplingMode::None), nullptr);
  const auto b = run_experiment_grid(config, input);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.to_table(), b.to_table());
}

TEST(Experiment, CorrelationRuleBarelyMovesAuc) {
  const auto spec = small_spec();
  const auto data = generate_synthetic(spec, 4);
  const ExperimentData input{data.records, data.profiles, data.labels, spec.baseline};
  const FeatureWindows windows{6, 4, 4};
  auto h = default_hyperparameters(LearnerKind::XgbStyle);
  h.n_trees = 60;
  auto auc_with = [&](std::optional<double> threshold) {
    SelectionPolicy policy;
    policy.correlation_threshold = threshold;
    const auto built = build_feature_dataset(FeatureSet::Combined, input, windows, policy, RankOptions{});
    const auto [train, test] = split_train_test(built.dataset, 0.7, 11);
    return holdout_auc(train, test, LearnerKind::XgbStyle, h, SamplingMode::None, 11);
  };
  const double on = auc_with(0.95);
  const double off = auc_with(std::nullopt);
  EXPECT_LT(std::abs(on - off), 0.01) << on << " vs " << off;
}
