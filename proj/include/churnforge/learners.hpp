#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "churnforge/feature_matrix.hpp"
#include "churnforge/tree.hpp"

namespace churnforge {

enum class LearnerKind : std::uint8_t { DecisionTree, RandomForest, Gbm, XgbStyle };
enum class SamplingMode : std::uint8_t { None, Oversample, Undersample };

std::string_view to_string(LearnerKind kind) noexcept;
std::string_view to_string(SamplingMode mode) noexcept;
LearnerKind parse_learner_kind(std::string_view token);
SamplingMode parse_sampling_mode(std::string_view token);

struct Hyperparameters {
  int n_trees = 1;
  double learning_rate = 0.1;
  int max_depth = 6;
  std::size_t max_nodes = 0;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  /// Random forest: fraction of features tried per split; 0 means sqrt(p).
  double max_features = 0.0;
  bool bootstrap = true;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

void to_json(nlohmann::json& j, const Hyperparameters& h);
void from_json(const nlohmann::json& j, Hyperparameters& h);

/// Tuned values where published (DT 20/398, RF 200 trees, GBM 200 trees,
/// XGB 180 trees), otherwise learning rate 0.1, depth 6, lambda 1, gamma 0.
Hyperparameters default_hyperparameters(LearnerKind kind);
/// NONE for the boosted learners, UNDERSAMPLE for DT and RF.
SamplingMode default_sampling(LearnerKind kind);

struct TrainedModel {
  LearnerKind kind = LearnerKind::DecisionTree;
  Hyperparameters hyperparameters;
  std::uint64_t rng_seed = 0;
  double learning_rate = 1.0;
  /// Boosted kinds: prior log-odds. Tree kinds: unused (0).
  double base_score = 0.0;
  /// Training schema: name, kind and category list per feature.
  std::vector<FeatureColumn> schema;
  std::string schema_hash;
  std::vector<Tree> trees;
  std::vector<double> feature_gain;

  /// Probability of CHURN for one encoded row.
  double predict_row(std::span<const double> row) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

/// Training log-loss after each boosting round (index 0 = base score only).
struct TrainingTrace {
  std::vector<double> loss;
};

TrainedModel train_decision_tree(const LabeledDataset& train, const Hyperparameters& h);
TrainedModel train_random_forest(const LabeledDataset& train, const Hyperparameters& h, std::uint64_t seed,
                                 unsigned threads = 1);
TrainedModel train_gbm(const LabeledDataset& train, const Hyperparameters& h, TrainingTrace* trace = nullptr);
TrainedModel train_xgb_style(const LabeledDataset& train, const Hyperparameters& h,
                             TrainingTrace* trace = nullptr);
TrainedModel train(const LabeledDataset& train, LearnerKind kind, const Hyperparameters& h, std::uint64_t seed,
                   unsigned threads = 1);

/// CHURN probabilities aligned with m.ids(). Throws Error(SchemaMismatch) when
/// the matrix schema differs from the training schema.
std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& m);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split; depends only on (ids, labels, fraction, seed).
/// Throws Error(InvalidArgument) unless 0 < fraction < 1 and each class has >= 2 rows.
SplitIndices split_indices(std::span<const std::string> ids, std::span<const Label> labels, double fraction,
                           std::uint64_t seed);
std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, double fraction,
                                                           std::uint64_t seed);

/// Class rebalancing. Resampled sets may repeat ids (OVERSAMPLE duplicates rows).
LabeledDataset resample(const LabeledDataset& train, SamplingMode mode, std::uint64_t seed);

/// Stratified fold id per row, in [0, k).
std::vector<int> stratified_folds(std::span<const std::string> ids, std::span<const Label> labels, int k,
                                  std::uint64_t seed);

struct GridPointResult {
  Hyperparameters params;
  std::vector<double> fold_aucs;
  double mean_auc = 0.0;
};

struct CvResult {
  Hyperparameters best;
  std::vector<double> best_fold_aucs;
  std::vector<GridPointResult> points;

  nlohmann::json to_json() const;
};

/// k-fold stratified cross-validation over `grid`; resampling is applied to the
/// training folds only. Best mean AUC wins; ties go to fewer trees, then
/// shallower trees. Throws Error(InvalidArgument) when k < 2, k exceeds the
/// minority count, or the grid is empty.
CvResult cross_validate(const LabeledDataset& ds, LearnerKind kind, std::span<const Hyperparameters> grid, int k,
                        SamplingMode sampling, std::uint64_t seed, unsigned threads = 1);

}  // namespace churnforge
