#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "churnforge/feature_matrix.hpp"

namespace churnforge {

/// Either a split (feature >= 0) or a leaf carrying a score.
struct TreeNode {
  std::int32_t feature = -1;
  bool categorical = false;
  /// Numeric split: value <= threshold goes left.
  double threshold = 0.0;
  /// Categorical split: codes whose bit is set go left.
  std::uint64_t left_categories = 0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes stored in preorder with the root at index 0.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  int depth() const;
  std::size_t leaf_count() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

inline constexpr std::size_t kMaxCategoryCodes = 64;

/// Column-major numeric encoding of a feature matrix; categorical cells hold
/// their code in the column's category list (-1 when unknown).
struct TrainingMatrix {
  std::vector<std::vector<double>> columns;
  std::vector<FeatureKind> kinds;

  std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t features() const noexcept { return columns.size(); }
  std::vector<double> row(std::size_t i) const;
};

/// Encodes `m` with the category lists in `schema` (one entry per column).
TrainingMatrix encode(const FeatureMatrix& m, std::span<const FeatureColumn> schema);
TrainingMatrix encode(const FeatureMatrix& m);

/// Per numeric feature: rows sorted by (value, row) and each row's rank in it.
class FeatureIndex {
 public:
  explicit FeatureIndex(const TrainingMatrix& m);

  const TrainingMatrix& matrix() const noexcept { return *matrix_; }
  std::span<const std::uint32_t> order(std::size_t f) const { return order_[f]; }
  std::span<const std::uint32_t> rank(std::size_t f) const { return rank_[f]; }

 private:
  const TrainingMatrix* matrix_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::vector<std::uint32_t>> rank_;
};

enum class SplitCriterion : std::uint8_t { Gini, SquaredError, SecondOrder };

/// Per-row sufficient statistics. Gini: (weight, weight*y, -). Squared error:
/// (1, residual, hessian). Second order: (1, gradient, hessian).
struct RowStat {
  double w = 0.0;
  double a = 0.0;
  double b = 0.0;

  RowStat& operator+=(const RowStat& o) noexcept {
    w += o.w;
    a += o.a;
    b += o.b;
    return *this;
  }
  friend RowStat operator-(RowStat x, const RowStat& y) noexcept {
    x.w -= y.w;
    x.a -= y.a;
    x.b -= y.b;
    return x;
  }
};

struct GrowthParams {
  SplitCriterion criterion = SplitCriterion::Gini;
  int max_depth = 6;
  /// Total node cap; 0 means unlimited. When set, growth is best-first.
  std::size_t max_nodes = 0;
  /// Minimum child weight: on `b` for SecondOrder, on `w` otherwise.
  double min_child_weight = 0.0;
  double lambda = 1.0;
  double gamma = 0.0;
  /// Accept splits with zero gain when the node is impure (classification trees).
  bool allow_zero_gain = false;
  /// Candidate features per split; 0 means every feature.
  std::size_t features_per_split = 0;
};

struct GrowthResult {
  Tree tree;
  /// Realized split gain summed per feature.
  std::vector<double> feature_gain;
};

/// Greedy exact split search. Numeric candidates are midpoints between
/// consecutive distinct values present in the node; categorical candidates
/// are prefixes of the categories ordered by a/w (a/b for SecondOrder).
/// Ties keep the lowest feature index, then the lowest threshold.
GrowthResult grow_tree(const FeatureIndex& index, std::span<const RowStat> stats,
                       std::span<const std::uint32_t> rows, const GrowthParams& params,
                       const std::function<double(const RowStat&)>& leaf_value, std::mt19937_64* rng = nullptr);

}  // namespace churnforge
