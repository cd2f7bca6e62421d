#include "churnforge/dataset.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "churnforge/error.hpp"

namespace churnforge {
namespace {

void add_sna_columns(FeatureMatrix& m, const std::vector<SnaFeatureRow>& rows) {
  const auto& names = sna_feature_names();
  std::vector<std::vector<double>> cols(names.size(), std::vector<double>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto values = sna_feature_values(rows[i]);
    for (std::size_t k = 0; k < names.size(); ++k) cols[k][i] = values[k];
  }
  for (std::size_t k = 0; k < names.size(); ++k) m.add_column(FeatureColumn::numeric(names[k], std::move(cols[k])));
}

std::vector<SnaFeatureRow> align(std::span<const std::string> ids, std::span<const SnaFeatureRow> sna, double damping) {
  std::unordered_map<std::string, const SnaFeatureRow*> by_id;
  for (const auto& r : sna) by_id.emplace(r.id.to_string(), &r);
  std::vector<SnaFeatureRow> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    rows.push_back(it != by_id.end() ? *it->second : isolated_sna_row(CustomerId::parse(id), damping));
  }
  return rows;
}

}  // namespace

FeatureMatrix sna_matrix(std::span<const std::string> ids, std::span<const SnaFeatureRow> sna, double damping) {
  FeatureMatrix m(std::vector<std::string>(ids.begin(), ids.end()));
  add_sna_columns(m, align(ids, sna, damping));
  return m;
}

FeatureMatrix merge(const FeatureMatrix& statistical, std::span<const SnaFeatureRow> sna,
                    std::span<const CustomerProfile> profiles, double damping) {
  std::vector<CustomerId> keys;
  for (const auto& id : statistical.ids()) keys.push_back(CustomerId::parse(id));
  for (const auto& r : sna) {
    if (r.id.op == Operator::Home) keys.push_back(r.id);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<std::string> ids;
  ids.reserve(keys.size());
  for (const auto& k : keys) ids.push_back(k.to_string());

  std::unordered_map<std::string, std::size_t> stat_row;
  for (std::size_t i = 0; i < statistical.row_count(); ++i) stat_row.emplace(statistical.ids()[i], i);
  std::unordered_map<std::string, const CustomerProfile*> profile_of;
  for (const auto& p : profiles) profile_of.emplace(p.id.to_string(), &p);

  FeatureMatrix m(ids);
  for (const auto& c : statistical.columns()) {
    FeatureColumn out;
    out.name = c.name;
    out.kind = c.kind;
    out.categories = c.categories;
    for (const auto& id : ids) {
      auto it = stat_row.find(id);
      const AttributeValue* attr = nullptr;
      if (it == stat_row.end()) {
        if (auto p = profile_of.find(id); p != profile_of.end()) attr = p->second->attribute(c.name);
      }
      if (c.kind == FeatureKind::Numeric) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (it != stat_row.end()) v = c.numbers[it->second];
        else if (attr && std::holds_alternative<double>(*attr)) v = std::get<double>(*attr);
        out.numbers.push_back(v);
      } else {
        std::optional<std::string> v;
        if (it != stat_row.end()) v = c.labels[it->second];
        else if (attr && std::holds_alternative<std::string>(*attr)) v = std::get<std::string>(*attr);
        out.labels.push_back(std::move(v));
      }
    }
    m.add_column(std::move(out));
  }
  add_sna_columns(m, align(ids, sna, damping));
  return m;
}

LabeledDataset assemble(const FeatureMatrix& m, std::span<const LabelRecord> labels,
                        std::span<const CustomerProfile> profiles, Date baseline, int exclusion_months) {
  std::unordered_map<std::string, Label> label_of;
  for (const auto& l : labels) label_of.emplace(l.id.to_string(), l.label);
  std::unordered_map<std::string, Date> activation_of;
  for (const auto& p : profiles) activation_of.emplace(p.id.to_string(), p.activation_date);
  const Date cutoff = add_months(baseline, -exclusion_months);

  std::vector<std::size_t> keep;
  std::vector<Label> kept_labels;
  for (std::size_t i = 0; i < m.row_count(); ++i) {
    const auto& id = m.ids()[i];
    if (auto a = activation_of.find(id); a != activation_of.end() && a->second >= cutoff) continue;
    auto l = label_of.find(id);
    if (l == label_of.end()) throw Error(ErrorCode::MissingLabel, "no label for " + id);
    keep.push_back(i);
    kept_labels.push_back(l->second);
  }
  LabeledDataset ds;
  ds.matrix = m.select_rows(keep);
  ds.labels = std::move(kept_labels);
  ds.baseline = baseline;
  return ds;
}

}  // namespace churnforge
