#pragma once

#include <span>
#include <string>
#include <vector>

#include "churnforge/feature_matrix.hpp"
#include "churnforge/records.hpp"

namespace churnforge {

struct StatisticalFeatures {
  FeatureMatrix matrix;
  std::vector<std::string> warnings;
};

/// Per-customer activity aggregates over the `window_months` calendar months
/// before `baseline`, one row per profile. Covers count/sum/mean/max/min per
/// event family per month and over the whole window, distinct contacts and
/// cells, week and day aggregates of the final month, the named behavioural
/// features (days_since_last_outgoing, avg_radio_access_type,
/// pct_competitor_transactions, dropped_call_count, customer_age, ...) and a
/// passthrough of every profile attribute.
StatisticalFeatures statistical_features(std::span<const CdrRecord> records,
                                         std::span<const CustomerProfile> profiles, int window_months,
                                         Date baseline);

}  // namespace churnforge
