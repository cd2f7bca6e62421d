#include "churnforge/experiment.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <unordered_map>

#include <fmt/format.h>

#include "churnforge/error.hpp"
#include "churnforge/evaluation.hpp"
#include "churnforge/statistical.hpp"
#include "churnforge/util.hpp"

namespace churnforge {

std::string_view to_string(FeatureSet set) noexcept {
  switch (set) {
    case FeatureSet::Statistical: return "STATISTICAL";
    case FeatureSet::Sna: return "SNA";
    case FeatureSet::Combined: return "COMBINED";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view t) {
  if (t == "STATISTICAL") return FeatureSet::Statistical;
  if (t == "SNA") return FeatureSet::Sna;
  if (t == "COMBINED") return FeatureSet::Combined;
  throw Error(ErrorCode::InvalidArgument, "unknown feature set '" + std::string(t) + "' (STATISTICAL, SNA, COMBINED)");
}

Hyperparameters ExperimentConfig::params_for(LearnerKind kind) const {
  auto it = hyperparameters.find(kind);
  return it != hyperparameters.end() ? it->second : default_hyperparameters(kind);
}

const ExperimentCell* ExperimentReport::find(FeatureSet set, LearnerKind algorithm, SamplingMode sampling) const {
  for (const auto& c : cells) {
    if (c.feature_set == set && c.algorithm == algorithm && c.sampling == sampling) return &c;
  }
  return nullptr;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : cells) {
    cj.push_back({{"feature_set", std::string(churnforge::to_string(c.feature_set))},
                  {"algorithm", std::string(churnforge::to_string(c.algorithm))},
                  {"sampling", std::string(churnforge::to_string(c.sampling))},
                  {"auc", c.auc},
                  {"seed", c.seed},
                  {"config_hash", c.config_hash}});
  }
  nlohmann::json sj = nlohmann::json::array();
  for (const auto& s : sweep) {
    sj.push_back({{"family", std::string(churnforge::to_string(s.family))},
                  {"months", s.months},
                  {"auc", s.auc},
                  {"seed", s.seed},
                  {"config_hash", s.config_hash}});
  }
  return {{"config_hash", config_hash}, {"seed", seed}, {"cells", cj}, {"sweep", sj}};
}

std::string ExperimentReport::to_table() const {
  constexpr std::array<LearnerKind, 4> algorithms{LearnerKind::XgbStyle, LearnerKind::Gbm, LearnerKind::RandomForest,
                                                  LearnerKind::DecisionTree};
  auto cell_text = [](const ExperimentCell* c) { return c ? fmt::format("{:>10.4f}", c->auc) : fmt::format("{:>10}", "-"); };
  std::string out = fmt::format("config {}  seed {}\n\n", config_hash, seed);

  out += "AUC by feature set (default sampling per algorithm)\n";
  out += fmt::format("{:<12}", "features");
  for (auto a : algorithms) out += fmt::format("{:>10}", churnforge::to_string(a));
  out += "\n";
  for (auto set : {FeatureSet::Statistical, FeatureSet::Sna, FeatureSet::Combined}) {
    out += fmt::format("{:<12}", churnforge::to_string(set));
    for (auto a : algorithms) out += cell_text(find(set, a, default_sampling(a)));
    out += "\n";
  }

  out += "\nAUC by sampling (combined features)\n";
  out += fmt::format("{:<12}", "sampling");
  for (auto a : algorithms) out += fmt::format("{:>10}", churnforge::to_string(a));
  out += "\n";
  for (auto mode : {SamplingMode::Oversample, SamplingMode::Undersample, SamplingMode::None}) {
    out += fmt::format("{:<12}", churnforge::to_string(mode));
    for (auto a : algorithms) out += cell_text(find(FeatureSet::Combined, a, mode));
    out += "\n";
  }

  if (!sweep.empty()) {
    out += "\nAUC by window length\n";
    out += fmt::format("{:<12}{:>8}{:>10}\n", "family", "months", "auc");
    for (const auto& s : sweep) {
      out += fmt::format("{:<12}{:>8}{:>10.4f}\n", churnforge::to_string(s.family), s.months, s.auc);
    }
  }
  return out;
}

namespace {

std::vector<std::string> profile_ids(std::span<const CustomerProfile> profiles) {
  std::vector<CustomerId> keys;
  for (const auto& p : profiles) keys.push_back(p.id);
  std::sort(keys.begin(), keys.end());
  std::vector<std::string> ids;
  for (const auto& k : keys) ids.push_back(k.to_string());
  return ids;
}

/// Exclusion, labels and selection, in that order. Rows dropped by selection
/// take their labels with them.
BuiltDataset finish(const FeatureMatrix& m, const ExperimentData& data, const FeatureWindows& windows,
                    const SelectionPolicy& policy, std::vector<std::string> warnings) {
  const LabeledDataset assembled = assemble(m, data.labels, data.profiles, data.baseline, windows.exclusion_months);
  auto selected = transform_select(assembled.matrix, policy);
  std::unordered_map<std::string, Label> label_of;
  for (std::size_t i = 0; i < assembled.size(); ++i) label_of.emplace(assembled.matrix.ids()[i], assembled.labels[i]);
  BuiltDataset out;
  out.dataset.matrix = std::move(selected.matrix);
  out.dataset.baseline = data.baseline;
  for (const auto& id : out.dataset.matrix.ids()) out.dataset.labels.push_back(label_of.at(id));
  out.report = std::move(selected.report);
  out.warnings = std::move(warnings);
  return out;
}

SnaResult sna_rows(const ExperimentData& data, int months, const RankOptions& rank, unsigned threads) {
  return sna_features(data.records, months_before(data.baseline, months), SnaConfig{rank, threads});
}

std::vector<std::string> rank_warnings(const SnaResult& sna) {
  std::vector<std::string> w;
  for (const auto& tag : sna.unconverged) w.push_back("rank did not converge: " + tag);
  return w;
}

}  // namespace

BuiltDataset build_feature_dataset(FeatureSet set, const ExperimentData& data, const FeatureWindows& windows,
                                   const SelectionPolicy& policy, const RankOptions& rank, unsigned threads) {
  if (windows.statistical_months < 1 || windows.sna_months < 1) {
    throw Error(ErrorCode::InvalidArgument, "feature windows must span at least one month");
  }
  switch (set) {
    case FeatureSet::Statistical: {
      auto stat = statistical_features(data.records, data.profiles, windows.statistical_months, data.baseline);
      return finish(stat.matrix, data, windows, policy, std::move(stat.warnings));
    }
    case FeatureSet::Sna: {
      const auto sna = sna_rows(data, windows.sna_months, rank, threads);
      return finish(sna_matrix(profile_ids(data.profiles), sna.rows, rank.damping), data, windows, policy,
                    rank_warnings(sna));
    }
    case FeatureSet::Combined: {
      auto stat = statistical_features(data.records, data.profiles, windows.statistical_months, data.baseline);
      const auto sna = sna_rows(data, windows.sna_months, rank, threads);
      auto warnings = std::move(stat.warnings);
      for (auto& w : rank_warnings(sna)) warnings.push_back(std::move(w));
      return finish(merge(stat.matrix, sna.rows, data.profiles, rank.damping), data, windows, policy,
                    std::move(warnings));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature set");
}

double holdout_auc(const LabeledDataset& train, const LabeledDataset& test, LearnerKind kind,
                   const Hyperparameters& params, SamplingMode sampling, std::uint64_t seed, unsigned threads) {
  const auto balanced = resample(train, sampling, derive_seed(seed, "resample"));
  const auto model = churnforge::train(balanced, kind, params, derive_seed(seed, "train"), threads);
  return roc_auc(predict(model, test.matrix), test.labels).auc;
}

ExperimentReport run_experiment_grid(const ExperimentConfig& config, const ExperimentData& data) {
  ExperimentReport report;
  report.config_hash = config.config_hash;
  report.seed = config.seed;
  const FeatureWindows windows{config.statistical_window_months, config.sna_window_months, config.exclusion_months};

  // Statistical and SNA rows are shared by the families that need them.
  std::optional<StatisticalFeatures> stat;
  std::optional<SnaResult> sna;
  auto need_stat = [&]() -> const StatisticalFeatures& {
    if (!stat) stat = statistical_features(data.records, data.profiles, windows.statistical_months, data.baseline);
    return *stat;
  };
  auto need_sna = [&]() -> const SnaResult& {
    if (!sna) sna = sna_rows(data, windows.sna_months, config.rank, config.threads);
    return *sna;
  };

  for (auto set : config.feature_sets) {
    BuiltDataset built;
    switch (set) {
      case FeatureSet::Statistical: built = finish(need_stat().matrix, data, windows, config.selection, {}); break;
      case FeatureSet::Sna:
        built = finish(sna_matrix(profile_ids(data.profiles), need_sna().rows, config.rank.damping), data, windows,
                       config.selection, {});
        break;
      case FeatureSet::Combined:
        built = finish(merge(need_stat().matrix, need_sna().rows, data.profiles, config.rank.damping), data, windows,
                       config.selection, {});
        break;
    }
    const auto [train, test] = split_train_test(built.dataset, config.train_fraction, config.seed);
    for (auto algorithm : config.algorithms) {
      for (auto sampling : config.samplings) {
        ExperimentCell cell;
        cell.feature_set = set;
        cell.algorithm = algorithm;
        cell.sampling = sampling;
        cell.seed = config.seed;
        cell.config_hash = config.config_hash;
        cell.auc = holdout_auc(train, test, algorithm, config.params_for(algorithm), sampling, config.seed,
                               config.threads);
        report.cells.push_back(std::move(cell));
      }
    }
  }

  for (auto family : config.sweep_families) {
    for (int months : config.sweep_months) {
      FeatureWindows w = windows;
      if (family == FeatureSet::Sna) w.sna_months = months;
      else w.statistical_months = months;
      if (family == FeatureSet::Combined) w.sna_months = months;
      const auto built = build_feature_dataset(family, data, w, config.selection, config.rank, config.threads);
      const auto [train, test] = split_train_test(built.dataset, config.train_fraction, config.seed);
      SweepPoint point;
      point.family = family;
      point.months = months;
      point.seed = config.seed;
      point.config_hash = config.config_hash;
      point.auc = holdout_auc(train, test, config.sweep_algorithm, config.params_for(config.sweep_algorithm),
                              default_sampling(config.sweep_algorithm), config.seed, config.threads);
      report.sweep.push_back(std::move(point));
    }
  }
  return report;
}

}  // namespace churnforge
