#include "churnforge/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "churnforge/util.hpp"

namespace churnforge {

std::string_view to_string(SelectionRule rule) noexcept {
  switch (rule) {
    case SelectionRule::IdentifierColumns: return "identifier_columns";
    case SelectionRule::ConstantColumns: return "constant_columns";
    case SelectionRule::DuplicateColumns: return "duplicate_columns";
    case SelectionRule::SparseRows: return "sparse_rows";
    case SelectionRule::SparseColumns: return "sparse_columns";
    case SelectionRule::CategoricalMissingToOther: return "categorical_missing_to_other";
    case SelectionRule::NumericMissingToMean: return "numeric_missing_to_mean";
    case SelectionRule::CategoryCap: return "category_cap";
    case SelectionRule::CorrelatedColumns: return "correlated_columns";
  }
  return "?";
}

nlohmann::json SelectionReport::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json touched_json = nlohmann::json::array();
    for (const auto& [name, count] : s.touched) touched_json.push_back({{"column", name}, {"cells", count}});
    nlohmann::json corr = nlohmann::json::array();
    for (const auto& [dropped, kept, r] : s.correlations) {
      corr.push_back({{"dropped", dropped}, {"kept", kept}, {"r", r}});
    }
    steps_json.push_back({{"rule", std::string(churnforge::to_string(s.rule))},
                          {"dropped_columns", s.dropped_columns},
                          {"dropped_rows", s.dropped_rows},
                          {"touched", touched_json},
                          {"correlations", corr}});
  }
  return {{"retyped_columns", retyped_columns}, {"passes", passes}, {"steps", steps_json}};
}

namespace {

/// Centered copy of x with its sum of squares; pearson() and the correlation
/// rule share it so both give bit-identical r.
struct Centered {
  std::vector<double> values;
  double ss = 0.0;
};

Centered center(std::span<const double> x) {
  Centered c;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  c.values.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    c.values[i] = x[i] - mean;
    c.ss += c.values[i] * c.values[i];
  }
  return c;
}

double correlate(const Centered& a, const Centered& b) {
  if (a.ss <= 0.0 || b.ss <= 0.0) return 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) cross += a.values[i] * b.values[i];
  return cross / std::sqrt(a.ss * b.ss);
}

bool same_cells(const FeatureColumn& a, const FeatureColumn& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == FeatureKind::Categorical) return a.labels == b.labels;
  for (std::size_t i = 0; i < a.numbers.size(); ++i) {
    const bool ma = std::isnan(a.numbers[i]), mb = std::isnan(b.numbers[i]);
    if (ma != mb || (!ma && a.numbers[i] != b.numbers[i])) return false;
  }
  return true;
}

std::size_t cell_hash(const FeatureColumn& c) {
  std::size_t h = c.kind == FeatureKind::Numeric ? 1469598103934665603ull : 1099511628211ull;
  auto mix = [&h](std::size_t v) { h = (h ^ v) * 1099511628211ull; };
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.kind == FeatureKind::Numeric) {
      mix(std::isnan(c.numbers[i]) ? 0x9e3779b9u : std::hash<double>{}(c.numbers[i]));
    } else {
      mix(c.labels[i] ? std::hash<std::string>{}(*c.labels[i]) : 0x9e3779b9u);
    }
  }
  return h;
}

bool is_constant(const FeatureColumn& c) {
  bool seen = false;
  if (c.kind == FeatureKind::Numeric) {
    double first = 0.0;
    for (double v : c.numbers) {
      if (std::isnan(v)) continue;
      if (!seen) {
        first = v;
        seen = true;
      } else if (v != first) {
        return false;
      }
    }
  } else {
    const std::string* first = nullptr;
    for (const auto& v : c.labels) {
      if (!v) continue;
      if (!first) {
        first = &*v;
        seen = true;
      } else if (*v != *first) {
        return false;
      }
    }
  }
  return seen;
}

class Pass {
 public:
  Pass(FeatureMatrix& m, const SelectionPolicy& policy, std::vector<RuleOutcome>& steps)
      : m_(m), policy_(policy), steps_(steps) {}

  bool run() {
    drop_where(SelectionRule::IdentifierColumns, [&](const FeatureColumn& c) {
      return std::find(policy_.identifier_columns.begin(), policy_.identifier_columns.end(), c.name) !=
             policy_.identifier_columns.end();
    });
    drop_where(SelectionRule::ConstantColumns, is_constant);
    drop_duplicates();
    drop_sparse_rows();
    drop_where(SelectionRule::SparseColumns, [&](const FeatureColumn& c) {
      return c.size() > 0 &&
             static_cast<double>(c.missing_count()) / static_cast<double>(c.size()) > policy_.max_column_missing;
    });
    fill_categorical();
    fill_numeric();
    cap_categories();
    drop_correlated();
    return changed_;
  }

 private:
  RuleOutcome& step(SelectionRule rule) { return steps_[static_cast<std::size_t>(rule)]; }

  template <typename Pred>
  void drop_where(SelectionRule rule, Pred&& pred) {
    std::vector<bool> drop(m_.column_count(), false);
    for (std::size_t j = 0; j < m_.column_count(); ++j) {
      if (pred(m_.column(j))) {
        drop[j] = true;
        step(rule).dropped_columns.push_back(m_.column(j).name);
        changed_ = true;
      }
    }
    m_.remove_columns(drop);
  }

  void drop_duplicates() {
    std::vector<bool> drop(m_.column_count(), false);
    std::unordered_map<std::size_t, std::vector<std::size_t>> buckets;
    for (std::size_t j = 0; j < m_.column_count(); ++j) {
      auto& bucket = buckets[cell_hash(m_.column(j))];
      const bool dup = std::any_of(bucket.begin(), bucket.end(),
                                   [&](std::size_t i) { return same_cells(m_.column(i), m_.column(j)); });
      if (dup) {
        drop[j] = true;
        step(SelectionRule::DuplicateColumns).dropped_columns.push_back(m_.column(j).name);
        changed_ = true;
      } else {
        bucket.push_back(j);
      }
    }
    m_.remove_columns(drop);
  }

  void drop_sparse_rows() {
    const std::size_t width = m_.column_count();
    if (width == 0) return;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < m_.row_count(); ++i) {
      std::size_t missing = 0;
      for (const auto& c : m_.columns()) missing += c.missing(i) ? 1 : 0;
      if (static_cast<double>(missing) / static_cast<double>(width) > policy_.max_row_missing) {
        step(SelectionRule::SparseRows).dropped_rows.push_back(m_.ids()[i]);
      } else {
        keep.push_back(i);
      }
    }
    if (keep.size() != m_.row_count()) {
      m_ = m_.select_rows(keep);
      changed_ = true;
    }
  }

  void fill_categorical() {
    for (auto& c : m_.columns()) {
      if (c.kind != FeatureKind::Categorical) continue;
      std::size_t filled = 0;
      for (auto& v : c.labels) {
        if (!v) {
          v = policy_.other_category;
          ++filled;
        }
      }
      if (filled > 0) {
        step(SelectionRule::CategoricalMissingToOther).touched.emplace_back(c.name, filled);
        changed_ = true;
      }
    }
  }

  void fill_numeric() {
    for (auto& c : m_.columns()) {
      if (c.kind != FeatureKind::Numeric) continue;
      double sum = 0.0;
      std::size_t present = 0;
      for (double v : c.numbers) {
        if (!std::isnan(v)) {
          sum += v;
          ++present;
        }
      }
      if (present == 0 || present == c.numbers.size()) continue;
      const double mean = sum / static_cast<double>(present);
      for (auto& v : c.numbers) {
        if (std::isnan(v)) v = mean;
      }
      step(SelectionRule::NumericMissingToMean).touched.emplace_back(c.name, c.numbers.size() - present);
      changed_ = true;
    }
  }

  void cap_categories() {
    for (auto& c : m_.columns()) {
      if (c.kind != FeatureKind::Categorical) continue;
      std::map<std::string, std::size_t> freq;
      for (const auto& v : c.labels) {
        if (v && *v != policy_.other_category) ++freq[*v];
      }
      std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      if (ranked.size() > policy_.max_categories) ranked.resize(policy_.max_categories);
      std::vector<std::string> kept;
      for (const auto& [name, count] : ranked) kept.push_back(name);
      std::sort(kept.begin(), kept.end());

      std::size_t relabelled = 0;
      for (auto& v : c.labels) {
        if (v && *v != policy_.other_category && !std::binary_search(kept.begin(), kept.end(), *v)) {
          v = policy_.other_category;
          ++relabelled;
        }
      }
      kept.push_back(policy_.other_category);
      c.categories = std::move(kept);
      if (relabelled > 0) {
        step(SelectionRule::CategoryCap).touched.emplace_back(c.name, relabelled);
        changed_ = true;
      }
    }
  }

  void drop_correlated() {
    if (!policy_.correlation_threshold) return;
    const double threshold = *policy_.correlation_threshold;
    std::vector<bool> drop(m_.column_count(), false);
    std::vector<std::pair<std::size_t, Centered>> kept;
    for (std::size_t j = 0; j < m_.column_count(); ++j) {
      const auto& c = m_.column(j);
      if (c.kind != FeatureKind::Numeric || c.numbers.empty()) continue;
      Centered cj = center(c.numbers);
      bool dropped = false;
      for (const auto& [i, ci] : kept) {
        const double r = correlate(ci, cj);
        if (std::abs(r) > threshold) {
          drop[j] = dropped = true;
          auto& s = step(SelectionRule::CorrelatedColumns);
          s.dropped_columns.push_back(c.name);
          s.correlations.emplace_back(c.name, m_.column(i).name, r);
          changed_ = true;
          break;
        }
      }
      if (!dropped) kept.emplace_back(j, std::move(cj));
    }
    m_.remove_columns(drop);
  }

  FeatureMatrix& m_;
  const SelectionPolicy& policy_;
  std::vector<RuleOutcome>& steps_;
  bool changed_ = false;
};

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  std::vector<double> px, py;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    px.push_back(x[i]);
    py.push_back(y[i]);
  }
  if (px.size() < 2) return 0.0;
  return correlate(center(px), center(py));
}

SelectionResult transform_select(const FeatureMatrix& input, const SelectionPolicy& policy) {
  SelectionResult result;
  result.matrix = input;
  auto& m = result.matrix;
  auto& report = result.report;

  for (auto& c : m.columns()) {
    if (c.kind != FeatureKind::Numeric ||
        std::find(policy.categorical_columns.begin(), policy.categorical_columns.end(), c.name) ==
            policy.categorical_columns.end()) {
      continue;
    }
    c.labels.resize(c.numbers.size());
    for (std::size_t i = 0; i < c.numbers.size(); ++i) {
      if (!std::isnan(c.numbers[i])) c.labels[i] = format_double(c.numbers[i]);
    }
    c.numbers.clear();
    c.kind = FeatureKind::Categorical;
    report.retyped_columns.push_back(c.name);
  }

  for (std::size_t r = 0; r < kSelectionRuleCount; ++r) {
    report.steps.push_back(RuleOutcome{static_cast<SelectionRule>(r), {}, {}, {}, {}});
  }
  do {
    ++report.passes;
  } while (Pass(m, policy, report.steps).run());
  return result;
}

}  // namespace churnforge
