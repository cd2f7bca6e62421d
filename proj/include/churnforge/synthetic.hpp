#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "churnforge/ingest.hpp"
#include "churnforge/records.hpp"

namespace churnforge {

/// Shape and signal knobs of a generated population. Defaults give the
/// desk-scale dataset used by the experiment suite.
struct SyntheticSpec {
  std::size_t customers = 10000;
  int months = 9;
  double churn_rate = 0.05;
  Date baseline = parse_date("2021-10-01");
  /// Churners go idle within this many months after the baseline.
  int label_horizon_months = 2;

  // Population structure.
  double competitor_ratio = 0.35;
  double landline_ratio = 0.03;
  double recent_activation_share = 0.08;
  int recent_activation_months = 4;
  std::size_t community_size = 40;
  double mean_friends = 10.0;
  double mean_monthly_events = 12.0;
  double mean_monthly_sessions = 6.0;
  double internet_user_share = 0.7;

  // Planted churn signal.
  /// Mean fraction of outgoing activity a churner has lost by the final month.
  double activity_decay = 0.45;
  /// Share of active customers that show a temporary dip of the same shape.
  double active_dip_share = 0.12;
  /// Extra competitor-contact share for churners.
  double competitor_shift = 0.06;
  /// Extra per-call drop probability and 2G session share for churners.
  double dropped_call_shift = 0.02;
  double slow_radio_shift = 0.12;
  /// Share of churners that open a competitor line reaching their friends.
  double shadow_probability = 0.65;
  /// Fraction of the churner's home friends the shadow line contacts.
  double shadow_reach = 0.6;
  /// Active customers running a second competitor line (SNA confounder).
  double dual_line_share = 0.03;
};

struct SyntheticDataset {
  std::vector<CdrRecord> records;
  std::vector<CustomerProfile> profiles;
  std::vector<LabelRecord> labels;
};

/// Deterministic for a fixed (spec, seed). Throws Error(InvalidArgument) for a
/// churn rate outside (0,1) or an empty population.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct SyntheticFiles {
  std::filesystem::path cdr;
  std::filesystem::path profiles;
  std::filesystem::path labels;
};

void write_synthetic(const SyntheticDataset& data, const SyntheticFiles& files, CdrFormat format);

}  // namespace churnforge
