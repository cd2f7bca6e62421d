#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "churnforge/experiment.hpp"
#include "churnforge/ingest.hpp"
#include "churnforge/learners.hpp"
#include "churnforge/selection.hpp"
#include "churnforge/social_graph.hpp"
#include "churnforge/synthetic.hpp"

namespace churnforge {

/// Single JSON configuration shared by every subcommand. Relative paths are
/// resolved against the config file's directory.
struct PipelineConfig {
  struct Paths {
    std::filesystem::path cdr;
    std::filesystem::path profiles;
    std::filesystem::path labels;
    std::filesystem::path workdir;
  } paths;
  CdrFormat cdr_format = CdrFormat::Csv;
  Date baseline{};
  int statistical_window_months = 6;
  int sna_window_months = 4;
  int exclusion_months = 4;
  RankOptions rank;
  SelectionPolicy selection;
  LearnerKind learner = LearnerKind::XgbStyle;
  std::vector<Hyperparameters> grid;
  int cv_folds = 10;
  std::optional<SamplingMode> sampling;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  SyntheticSpec synthetic;
  ExperimentConfig experiment;
  /// Canonical form of the parsed document; the config hash is its digest.
  nlohmann::json canonical;

  std::string hash() const;
  SamplingMode effective_sampling() const { return sampling.value_or(default_sampling(learner)); }

  /// Throws Error(Validation) on any invalid field.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
};

struct RunOptions {
  bool strict = false;
  unsigned threads = 1;
};

/// Artifact locations under the work directory.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path manifest(std::string_view command) const;
  std::filesystem::path edges() const { return root / "graph" / "edges.csv"; }
  std::filesystem::path sna() const { return root / "graph" / "sna_features.csv"; }
  std::filesystem::path dataset() const { return root / "features" / "dataset.csv"; }
  std::filesystem::path schema() const { return root / "features" / "schema.json"; }
  std::filesystem::path selection_report() const { return root / "features" / "selection_report.json"; }
  std::filesystem::path model() const { return root / "model" / "model.json"; }
  std::filesystem::path cv_report() const { return root / "model" / "cv_report.json"; }
  std::filesystem::path split() const { return root / "model" / "split.json"; }
  std::filesystem::path roc_csv() const { return root / "evaluation" / "roc.csv"; }
  std::filesystem::path roc_svg() const { return root / "evaluation" / "roc.svg"; }
  std::filesystem::path importance() const { return root / "evaluation" / "importance.csv"; }
  std::filesystem::path evaluation() const { return root / "evaluation" / "evaluation.json"; }
  std::filesystem::path report_json() const { return root / "experiment" / "report.json"; }
  std::filesystem::path report_txt() const { return root / "experiment" / "report.txt"; }
};

void cmd_generate(const PipelineConfig& config, const RunOptions& options = {});
void cmd_graph(const PipelineConfig& config, const RunOptions& options = {});
void cmd_features(const PipelineConfig& config, const RunOptions& options = {});
void cmd_train(const PipelineConfig& config, const RunOptions& options = {});
void cmd_evaluate(const PipelineConfig& config, const RunOptions& options = {});
void cmd_experiment(const PipelineConfig& config, const RunOptions& options = {});

}  // namespace churnforge
