#include "churnforge/feature_matrix.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "churnforge/error.hpp"
#include "churnforge/util.hpp"

namespace churnforge {

std::string_view to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::Numeric ? "numeric" : "categorical";
}

bool FeatureColumn::missing(std::size_t row) const {
  return kind == FeatureKind::Numeric ? std::isnan(numbers[row]) : !labels[row].has_value();
}

std::size_t FeatureColumn::missing_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += missing(i) ? 1 : 0;
  return n;
}

FeatureColumn FeatureColumn::numeric(std::string name, std::vector<double> values) {
  FeatureColumn c;
  c.name = std::move(name);
  c.kind = FeatureKind::Numeric;
  c.numbers = std::move(values);
  return c;
}

FeatureColumn FeatureColumn::categorical(std::string name, std::vector<std::optional<std::string>> values) {
  FeatureColumn c;
  c.name = std::move(name);
  c.kind = FeatureKind::Categorical;
  c.labels = std::move(values);
  return c;
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> ids) : ids_(std::move(ids)) {}

const FeatureColumn* FeatureMatrix::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::optional<std::size_t> FeatureMatrix::row_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return i;
  }
  return std::nullopt;
}

void FeatureMatrix::add_column(FeatureColumn column) {
  if (find(column.name)) throw Error(ErrorCode::SchemaCollision, "duplicate feature name '" + column.name + "'");
  if (column.size() != ids_.size()) {
    throw Error(ErrorCode::InvalidArgument, "column '" + column.name + "' has " + std::to_string(column.size()) +
                                                " cells for " + std::to_string(ids_.size()) + " rows");
  }
  columns_.push_back(std::move(column));
}

void FeatureMatrix::remove_columns(const std::vector<bool>& drop) {
  if (drop.size() != columns_.size()) throw Error(ErrorCode::InvalidArgument, "drop mask size mismatch");
  std::vector<FeatureColumn> kept;
  kept.reserve(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (!drop[j]) kept.push_back(std::move(columns_[j]));
  }
  columns_ = std::move(kept);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (auto r : rows) ids.push_back(ids_.at(r));
  FeatureMatrix out(std::move(ids));
  out.columns_.reserve(columns_.size());
  for (const auto& c : columns_) {
    FeatureColumn nc;
    nc.name = c.name;
    nc.kind = c.kind;
    nc.categories = c.categories;
    if (c.kind == FeatureKind::Numeric) {
      nc.numbers.reserve(rows.size());
      for (auto r : rows) nc.numbers.push_back(c.numbers[r]);
    } else {
      nc.labels.reserve(rows.size());
      for (auto r : rows) nc.labels.push_back(c.labels[r]);
    }
    out.columns_.push_back(std::move(nc));
  }
  return out;
}

void FeatureMatrix::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateIdentity, "duplicate row id '" + id + "'");
  }
  seen.clear();
  for (const auto& c : columns_) {
    if (!seen.insert(c.name).second) throw Error(ErrorCode::SchemaCollision, "duplicate column '" + c.name + "'");
    if (c.size() != ids_.size()) throw Error(ErrorCode::InvalidArgument, "ragged column '" + c.name + "'");
  }
}

std::size_t LabeledDataset::count(Label label) const {
  std::size_t n = 0;
  for (auto l : labels) n += l == label ? 1 : 0;
  return n;
}

LabeledDataset LabeledDataset::select_rows(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.matrix = matrix.select_rows(rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels.at(r));
  out.baseline = baseline;
  return out;
}

nlohmann::json schema_to_json(const FeatureMatrix& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : m.columns()) {
    cols.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}, {"categories", c.categories}});
  }
  return {{"columns", cols}};
}

std::string schema_hash(const FeatureMatrix& m) { return sha256_hex(schema_to_json(m).dump()); }

namespace {

std::string cell_text(const FeatureColumn& c, std::size_t i) {
  if (c.kind == FeatureKind::Numeric) return format_double(c.numbers[i]);
  return c.labels[i] ? csv_escape(*c.labels[i]) : std::string();
}

struct ColumnSpec {
  std::string name;
  FeatureKind kind;
  std::vector<std::string> categories;
};

std::vector<ColumnSpec> columns_from_schema(const nlohmann::json& schema) {
  std::vector<ColumnSpec> out;
  try {
    for (const auto& c : schema.at("columns")) {
      const auto kind = c.at("kind").get<std::string>();
      if (kind != "numeric" && kind != "categorical") throw Error(ErrorCode::Parse, "unknown column kind " + kind);
      out.push_back({c.at("name").get<std::string>(),
                     kind == "numeric" ? FeatureKind::Numeric : FeatureKind::Categorical,
                     c.value("categories", std::vector<std::string>{})});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad schema: ") + e.what());
  }
  return out;
}

FeatureMatrix read_table(std::istream& in, const nlohmann::json& schema, std::vector<Label>* labels) {
  const auto specs = columns_from_schema(schema);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty feature file");
  std::string expected = labels ? "id,label" : "id";
  for (const auto& s : specs) expected += "," + csv_escape(s.name);
  if (line != expected) throw Error(ErrorCode::SchemaMismatch, "feature file header does not match its schema");

  const std::size_t lead = labels ? 2 : 1;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> nums(specs.size());
  std::vector<std::vector<std::optional<std::string>>> cats(specs.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != specs.size() + lead) throw ParseError(ErrorCode::Parse, line_no, "wrong field count");
    ids.push_back(f[0]);
    if (labels) {
      const auto l = parse_label(f[1]);
      if (!l) throw ParseError(ErrorCode::Parse, line_no, "bad label '" + f[1] + "'");
      labels->push_back(*l);
    }
    for (std::size_t j = 0; j < specs.size(); ++j) {
      const auto& cell = f[j + lead];
      if (specs[j].kind == FeatureKind::Numeric) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (!cell.empty() && !parse_double(cell, v)) {
          throw ParseError(ErrorCode::Parse, line_no, "bad number '" + cell + "'");
        }
        nums[j].push_back(v);
      } else {
        cats[j].push_back(cell.empty() ? std::nullopt : std::optional<std::string>(cell));
      }
    }
  }
  FeatureMatrix m(std::move(ids));
  for (std::size_t j = 0; j < specs.size(); ++j) {
    FeatureColumn c = specs[j].kind == FeatureKind::Numeric
                          ? FeatureColumn::numeric(specs[j].name, std::move(nums[j]))
                          : FeatureColumn::categorical(specs[j].name, std::move(cats[j]));
    c.categories = specs[j].categories;
    m.add_column(std::move(c));
  }
  return m;
}

}  // namespace

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "id";
  for (const auto& c : m.columns()) out << ',' << csv_escape(c.name);
  out << '\n';
  for (std::size_t i = 0; i < m.row_count(); ++i) {
    out << csv_escape(m.ids()[i]);
    for (const auto& c : m.columns()) out << ',' << cell_text(c, i);
    out << '\n';
  }
}

FeatureMatrix read_matrix_csv(std::istream& in, const nlohmann::json& schema) { return read_table(in, schema, nullptr); }

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& schema_path) {
  const auto& m = ds.matrix;
  std::ostringstream out;
  out << "id,label";
  for (const auto& c : m.columns()) out << ',' << csv_escape(c.name);
  out << '\n';
  for (std::size_t i = 0; i < m.row_count(); ++i) {
    out << csv_escape(m.ids()[i]) << ',' << to_string(ds.labels[i]);
    for (const auto& c : m.columns()) out << ',' << cell_text(c, i);
    out << '\n';
  }
  auto schema = schema_to_json(m);
  schema["baseline"] = format_date(ds.baseline);
  atomic_write(csv_path, out.str());
  atomic_write(schema_path, schema.dump(2) + "\n");
}

LabeledDataset read_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& schema_path) {
  nlohmann::json schema;
  try {
    schema = nlohmann::json::parse(read_file(schema_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, schema_path.string() + ": " + e.what());
  }
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + csv_path.string());
  LabeledDataset ds;
  ds.matrix = read_table(in, schema, &ds.labels);
  if (schema.contains("baseline")) ds.baseline = parse_date(schema["baseline"].get<std::string>());
  return ds;
}

}  // namespace churnforge
