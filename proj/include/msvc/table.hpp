#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "msvc/errors.hpp"
#include "msvc/value.hpp"

namespace msvc {

struct Column {
  std::string name;
  ValueKind kind;
};

/// Ordered list of named, kinded columns. Names are unique and non-empty.
class Schema {
 public:
  Schema() = default;

  explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
    std::unordered_set<std::string> seen;
    for (const Column& c : columns_) {
      if (c.name.empty()) raise(ErrorKind::schema_mismatch, "empty column name");
      if (!seen.insert(c.name).second)
        raise(ErrorKind::duplicate_column, "duplicate column '" + c.name + "'");
    }
  }

  std::size_t arity() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name == name) return i;
    return std::nullopt;
  }

  bool has_column(std::string_view name) const { return index_of(name).has_value(); }

  friend bool operator==(const Schema& a, const Schema& b) {
    if (a.arity() != b.arity()) return false;
    for (std::size_t i = 0; i < a.arity(); ++i)
      if (a.columns_[i].name != b.columns_[i].name || a.columns_[i].kind != b.columns_[i].kind)
        return false;
    return true;
  }

 private:
  std::vector<Column> columns_;
};

/// Positional cell values aligned to a Schema.
struct Row {
  std::vector<Value> values;

  friend bool operator==(const Row& a, const Row& b) { return a.values == b.values; }
};

inline void validate_row(const Schema& schema, const Row& row) {
  if (row.values.size() != schema.arity())
    raise(ErrorKind::schema_mismatch,
          "row arity " + std::to_string(row.values.size()) + " != schema arity " +
              std::to_string(schema.arity()));
  for (std::size_t i = 0; i < row.values.size(); ++i) {
    if (!kind_accepts(schema.column(i).kind, row.values[i]))
      raise(ErrorKind::schema_mismatch,
            "column '" + schema.column(i).name + "' expects " +
                std::string(kind_name(schema.column(i).kind)) + ", got " +
                std::string(kind_name(row.values[i].kind())));
  }
}

using Partition = std::vector<Row>;

/// Immutable partitioned row container. Transforms return new tables;
/// reads are safe to share across threads.
class DataTable {
 public:
  /// Distributes rows round-robin over `num_partitions` partitions.
  static DataTable from_rows(std::vector<Row> rows, Schema schema, std::size_t num_partitions) {
    if (num_partitions < 1) raise(ErrorKind::invalid_partition_count, "need at least 1 partition");
    for (const Row& r : rows) validate_row(schema, r);
    std::vector<Partition> parts(num_partitions);
    for (std::size_t i = 0; i < rows.size(); ++i)
      parts[i % num_partitions].push_back(std::move(rows[i]));
    return DataTable(std::move(schema), std::move(parts));
  }

  const Schema& schema() const { return schema_; }
  std::size_t partition_count() const { return partitions_.size(); }
  const Partition& partition(std::size_t i) const { return partitions_.at(i); }

  std::size_t num_rows() const {
    std::size_t n = 0;
    for (const Partition& p : partitions_) n += p.size();
    return n;
  }

  /// Rows concatenated in partition order, then within-partition order.
  std::vector<Row> collect() const {
    std::vector<Row> out;
    out.reserve(num_rows());
    for (const Partition& p : partitions_)
      for (const Row& r : p) out.push_back(r);
    return out;
  }

  /// Round-robin redistribution of the concatenated row order into n partitions.
  DataTable repartition(std::size_t n) const {
    if (n < 1) raise(ErrorKind::invalid_partition_count, "need at least 1 partition");
    std::vector<Partition> parts(n);
    std::size_t i = 0;
    for (const Partition& p : partitions_)
      for (const Row& r : p) parts[i++ % n].push_back(r);
    return DataTable(schema_, std::move(parts));
  }

  /// Appends one column; `values` are row-aligned in collect() order.
  DataTable with_column(const std::string& name, ValueKind kind,
                        const std::vector<Value>& values) const {
    if (schema_.has_column(name)) raise(ErrorKind::duplicate_column, "column '" + name + "'");
    if (values.size() != num_rows())
      raise(ErrorKind::length_mismatch, std::to_string(values.size()) + " values for " +
                                            std::to_string(num_rows()) + " rows");
    for (const Value& v : values)
      if (!kind_accepts(kind, v))
        raise(ErrorKind::schema_mismatch, "value kind " + std::string(kind_name(v.kind())) +
                                              " not accepted by new column '" + name + "'");
    std::vector<Column> cols = schema_.columns();
    cols.push_back({name, kind});
    std::vector<Partition> parts = partitions_;
    std::size_t i = 0;
    for (Partition& p : parts)
      for (Row& r : p) r.values.push_back(values[i++]);
    return DataTable(Schema(std::move(cols)), std::move(parts));
  }

  /// Column values in collect() order.
  std::vector<Value> column_values(std::string_view name) const {
    auto idx = schema_.index_of(name);
    if (!idx) raise(ErrorKind::missing_column, std::string(name));
    std::vector<Value> out;
    out.reserve(num_rows());
    for (const Partition& p : partitions_)
      for (const Row& r : p) out.push_back(r.values[*idx]);
    return out;
  }

 private:
  DataTable(Schema schema, std::vector<Partition> partitions)
      : schema_(std::move(schema)), partitions_(std::move(partitions)) {}

  Schema schema_;
  std::vector<Partition> partitions_;
};

// ---------------------------------------------------------------------------
// JSON-lines loading

/// One JSON object per line; keys map to schema columns by name, missing keys
/// become Null, unknown keys are ignored. Int widens to Float where the column
/// is declared Float.
inline DataTable load_jsonl(std::istream& in, const Schema& schema, std::size_t num_partitions) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Value v = value_from_json_text(line);
    if (v.kind() != ValueKind::map)
      raise(ErrorKind::schema_mismatch, "line " + std::to_string(line_no) + ": not a JSON object");
    Row row;
    row.values.reserve(schema.arity());
    for (const Column& c : schema.columns()) {
      const Value* cell = v.find(c.name);
      if (cell == nullptr) {
        row.values.push_back(Value::null());
        continue;
      }
      Value out = *cell;
      if (c.kind == ValueKind::float_ && out.kind() == ValueKind::int_)
        out = Value::real(static_cast<double>(out.as_int()));
      if (!kind_accepts(c.kind, out))
        raise(ErrorKind::schema_mismatch, "line " + std::to_string(line_no) + ": column '" +
                                              c.name + "' expects " +
                                              std::string(kind_name(c.kind)));
      row.values.push_back(std::move(out));
    }
    rows.push_back(std::move(row));
  }
  return DataTable::from_rows(std::move(rows), schema, num_partitions);
}

inline DataTable load_jsonl_file(const std::string& path, const Schema& schema,
                                 std::size_t num_partitions) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::io_error, "cannot open " + path);
  return load_jsonl(in, schema, num_partitions);
}

}  // namespace msvc
