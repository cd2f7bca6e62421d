#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "churnforge/learners.hpp"
#include "churnforge/records.hpp"

namespace churnforge {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  /// Rows scoring >= threshold are predicted CHURN; +inf for the origin.
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;

  /// Trapezoidal area under `points`.
  double trapezoid_area() const;
};

/// One ROC point per distinct score; equal scores form a single step so the
/// AUC equals the Mann-Whitney statistic with ties counted as 1/2.
/// Throws Error(InvalidArgument) unless both classes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels);

void write_roc_csv(std::ostream& out, const RocCurve& curve);
/// Line plot of one or more named curves with the chance diagonal.
std::string roc_svg(std::span<const std::pair<std::string, RocCurve>> curves);

struct FeatureImportance {
  std::string feature;
  double gain = 0.0;
  double share = 0.0;
};

/// Features with positive total gain, descending; shares sum to 1.
std::vector<FeatureImportance> feature_importance(const TrainedModel& model);

}  // namespace churnforge
