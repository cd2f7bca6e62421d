#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "churnforge/feature_matrix.hpp"

namespace churnforge {

struct SelectionPolicy {
  std::vector<std::string> identifier_columns;
  /// Numeric columns to treat as categorical before the rules run.
  std::vector<std::string> categorical_columns;
  double max_row_missing = 0.90;
  double max_column_missing = 0.70;
  std::size_t max_categories = 31;
  std::string other_category = "Other";
  /// nullopt disables the correlation rule.
  std::optional<double> correlation_threshold = 0.95;
};

enum class SelectionRule : std::uint8_t {
  IdentifierColumns,
  ConstantColumns,
  DuplicateColumns,
  SparseRows,
  SparseColumns,
  CategoricalMissingToOther,
  NumericMissingToMean,
  CategoryCap,
  CorrelatedColumns,
};

inline constexpr std::size_t kSelectionRuleCount = 9;

std::string_view to_string(SelectionRule rule) noexcept;

struct RuleOutcome {
  SelectionRule rule{};
  std::vector<std::string> dropped_columns;
  std::vector<std::string> dropped_rows;
  /// column -> number of cells filled (steps 6 and 7) or re-labelled (step 8)
  std::vector<std::pair<std::string, std::size_t>> touched;
  /// correlated drops: (dropped column, kept column, r)
  std::vector<std::tuple<std::string, std::string, double>> correlations;
};

struct SelectionReport {
  std::vector<std::string> retyped_columns;
  /// Always nine entries, in rule order. Later fixpoint passes append to them.
  std::vector<RuleOutcome> steps;
  int passes = 0;

  nlohmann::json to_json() const;
};

struct SelectionResult {
  FeatureMatrix matrix;
  SelectionReport report;
};

/// Applies the nine transformation/selection rules in order and repeats the
/// sequence until a pass changes nothing, so the output is a fixed point.
SelectionResult transform_select(const FeatureMatrix& m, const SelectionPolicy& policy);

/// Pearson correlation over paired present values; 0 if either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace churnforge
