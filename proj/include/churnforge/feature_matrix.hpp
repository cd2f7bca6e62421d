#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "churnforge/records.hpp"

namespace churnforge {

enum class FeatureKind : std::uint8_t { Numeric, Categorical };

std::string_view to_string(FeatureKind kind) noexcept;

/// One column. Numeric cells live in `numbers` (NaN = missing); categorical
/// cells live in `labels` (nullopt = missing). `categories` is the closed
/// category list once the column has been transformed, empty before.
struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<double> numbers;
  std::vector<std::optional<std::string>> labels;
  std::vector<std::string> categories;

  std::size_t size() const noexcept {
    return kind == FeatureKind::Numeric ? numbers.size() : labels.size();
  }
  bool missing(std::size_t row) const;
  std::size_t missing_count() const;

  static FeatureColumn numeric(std::string name, std::vector<double> values);
  static FeatureColumn categorical(std::string name, std::vector<std::optional<std::string>> values);
};

/// Per-customer feature rows stored column-major. Row i of every column
/// belongs to ids[i].
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> ids);

  std::size_t row_count() const noexcept { return ids_.size(); }
  std::size_t column_count() const noexcept { return columns_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }
  std::vector<FeatureColumn>& columns() noexcept { return columns_; }
  const FeatureColumn& column(std::size_t j) const { return columns_[j]; }

  const FeatureColumn* find(std::string_view name) const;
  std::optional<std::size_t> row_of(std::string_view id) const;

  /// Throws Error(SchemaCollision) on a duplicate name and
  /// Error(InvalidArgument) on a length mismatch.
  void add_column(FeatureColumn column);
  void remove_columns(const std::vector<bool>& drop);
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  /// Throws unless every column has row_count() cells and ids are unique.
  void validate() const;

 private:
  std::vector<std::string> ids_;
  std::vector<FeatureColumn> columns_;
};

/// Feature matrix joined with churn labels (labels[i] belongs to row i).
struct LabeledDataset {
  FeatureMatrix matrix;
  std::vector<Label> labels;
  Date baseline{};

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t count(Label label) const;
  LabeledDataset select_rows(std::span<const std::size_t> rows) const;
};

/// Schema sidecar: `{"columns":[{"name","kind","categories"}]}`.
nlohmann::json schema_to_json(const FeatureMatrix& m);
/// Stable digest of names, kinds and category lists.
std::string schema_hash(const FeatureMatrix& m);

/// CSV with header `id,<columns...>`; missing cells are empty.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);
/// Reads a CSV written by write_matrix_csv, typed by the schema sidecar.
FeatureMatrix read_matrix_csv(std::istream& in, const nlohmann::json& schema);

/// Dataset persistence: `<stem>.csv` (id,label,<features>) and `<stem>.schema.json`.
void write_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& schema_path);
LabeledDataset read_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& schema_path);

}  // namespace churnforge
