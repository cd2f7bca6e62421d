#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "churnforge/dataset.hpp"
#include "churnforge/learners.hpp"
#include "churnforge/selection.hpp"
#include "churnforge/social_graph.hpp"

namespace churnforge {

enum class FeatureSet : std::uint8_t { Statistical, Sna, Combined };

std::string_view to_string(FeatureSet set) noexcept;
FeatureSet parse_feature_set(std::string_view token);

struct ExperimentData {
  std::span<const CdrRecord> records;
  std::span<const CustomerProfile> profiles;
  std::span<const LabelRecord> labels;
  Date baseline{};
};

struct ExperimentConfig {
  std::vector<FeatureSet> feature_sets{FeatureSet::Statistical, FeatureSet::Sna, FeatureSet::Combined};
  std::vector<LearnerKind> algorithms{LearnerKind::XgbStyle, LearnerKind::Gbm, LearnerKind::RandomForest,
                                      LearnerKind::DecisionTree};
  std::vector<SamplingMode> samplings{SamplingMode::Oversample, SamplingMode::Undersample, SamplingMode::None};
  std::vector<FeatureSet> sweep_families{FeatureSet::Statistical, FeatureSet::Sna};
  std::vector<int> sweep_months{1, 2, 3, 4, 5, 6, 7, 8, 9};
  LearnerKind sweep_algorithm = LearnerKind::XgbStyle;
  /// Overrides of default_hyperparameters per learner.
  std::map<LearnerKind, Hyperparameters> hyperparameters;
  int statistical_window_months = 6;
  int sna_window_months = 4;
  int exclusion_months = 4;
  double train_fraction = 0.7;
  SelectionPolicy selection;
  RankOptions rank;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  /// Digest of the configuration that produced the run; copied into every cell.
  std::string config_hash;

  Hyperparameters params_for(LearnerKind kind) const;
};

struct ExperimentCell {
  FeatureSet feature_set{};
  LearnerKind algorithm{};
  SamplingMode sampling{};
  double auc = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct SweepPoint {
  FeatureSet family{};
  int months = 0;
  double auc = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct ExperimentReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<ExperimentCell> cells;
  std::vector<SweepPoint> sweep;

  const ExperimentCell* find(FeatureSet set, LearnerKind algorithm, SamplingMode sampling) const;
  nlohmann::json to_json() const;
  /// Feature-set x algorithm table (default sampling per algorithm), the
  /// sampling x algorithm table on the combined set, and the window sweep.
  std::string to_table() const;
};

/// Builds the labeled dataset of one feature family.
struct FeatureWindows {
  int statistical_months = 6;
  int sna_months = 4;
  int exclusion_months = 4;
};

struct BuiltDataset {
  LabeledDataset dataset;
  SelectionReport report;
  std::vector<std::string> warnings;
};

BuiltDataset build_feature_dataset(FeatureSet set, const ExperimentData& data, const FeatureWindows& windows,
                                   const SelectionPolicy& policy, const RankOptions& rank, unsigned threads = 1);

/// Runs every configured (feature set x algorithm x sampling) cell and the
/// window sweep. The same config and data always give the same report.
ExperimentReport run_experiment_grid(const ExperimentConfig& config, const ExperimentData& data);

/// Trains on `train`, scores `test` and returns the AUC.
double holdout_auc(const LabeledDataset& train, const LabeledDataset& test, LearnerKind kind,
                   const Hyperparameters& params, SamplingMode sampling, std::uint64_t seed, unsigned threads = 1);

}  // namespace churnforge
