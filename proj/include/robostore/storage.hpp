#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "robostore/timestamp.hpp"

namespace robostore {

// Values are opaque byte strings; the store never interprets them.
using Bytes = std::string;

struct Cell {
  Bytes value;
  Timestamp ts;
  bool tombstone = false;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct FamilySpec {
  std::string name;
  bool is_super = false;

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

struct TableSchema {
  std::string name;
  std::vector<FamilySpec> families;
  Timestamp created_at;

  const FamilySpec* find_family(std::string_view family) const;
};

// table / row / family [/ super key] / column. The super key is present iff
// the family is declared super.
struct ColumnPath {
  std::string table;
  Bytes row_key;
  std::string family;
  std::optional<std::string> super_key;
  std::string column;

  // Slash-separated with %XX escapes for '%', '/', whitespace and
  // non-printable bytes. Four components for a standard family, five for a
  // super family.
  std::string to_string() const;
  static std::optional<ColumnPath> parse(std::string_view text);

  friend auto operator<=>(const ColumnPath&, const ColumnPath&) = default;
  friend bool operator==(const ColumnPath&, const ColumnPath&) = default;
};

std::string escape_component(std::string_view raw);
std::optional<std::string> unescape_component(std::string_view text);

struct ScanFilter {
  Bytes start_row;  // inclusive
  Bytes end_row;    // exclusive; empty means unbounded
  std::optional<std::string> family;
  std::optional<std::string> super_key;
  std::optional<std::string> column;
  std::optional<Bytes> value_equals;
  // Inclusive window. When set, every live version inside it matches instead
  // of only the newest one.
  std::optional<std::pair<Timestamp, Timestamp>> ts_window;
  std::size_t limit = 0;  // max rows, 0 = unlimited
};

struct ScanCell {
  ColumnPath path;
  Cell cell;
};

struct ScanRow {
  Bytes row_key;
  std::vector<ScanCell> cells;
};

// Versioned column-family store. Readers share a lock; every mutation takes
// it exclusively, which serializes writes to any single row.
class Store {
 public:
  using WallClock = std::function<Timestamp()>;

  explicit Store(WallClock wall_clock = {});

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  TableSchema create_table(const std::string& name, std::vector<FamilySpec> families);
  bool has_table(std::string_view name) const;
  std::optional<TableSchema> schema(std::string_view name) const;
  std::vector<std::string> table_names() const;

  // Returns the effective timestamp. An explicit timestamp that names an
  // existing version overwrites that version.
  Timestamp put(const ColumnPath& path, Bytes value, std::optional<Timestamp> ts = std::nullopt);
  // Inserts a tombstone.
  Timestamp erase(const ColumnPath& path, std::optional<Timestamp> ts = std::nullopt);

  std::optional<Cell> get_latest(const ColumnPath& path) const;
  std::optional<Cell> get_at(const ColumnPath& path, Timestamp ts) const;
  // Newest version including tombstones.
  std::optional<Cell> head(const ColumnPath& path) const;
  // Newest first.
  std::vector<Cell> versions(const ColumnPath& path) const;

  std::vector<ScanRow> scan(const std::string& table, const ScanFilter& filter) const;

  std::size_t gc(const std::string& table, Timestamp watermark, bool keep_latest);

  // Visits every stored column of a table in (row, family, super, column)
  // order with its version list, newest first.
  void for_each_column(const std::string& table,
                       const std::function<void(const ColumnPath&, std::span<const Cell>)>& fn) const;

  // Exact insertion used by loaders and replication: no clock assignment.
  void insert_version(const ColumnPath& path, Cell cell);

  Timestamp clock_reading() const;

 private:
  using VersionList = std::vector<Cell>;                       // newest first
  using ColumnMap = std::map<std::string, VersionList>;        // column -> versions
  using SuperMap = std::map<std::string, ColumnMap>;           // super key ("" for standard)
  using Row = std::map<std::string, SuperMap>;                 // family -> ...

  struct Table {
    TableSchema schema;
    std::map<Bytes, Row> rows;
  };

  const Table& table_or_throw(std::string_view name) const;
  Table& table_or_throw(std::string_view name);
  void validate_path(const Table& table, const ColumnPath& path) const;
  const VersionList* find_versions(const ColumnPath& path) const;
  Timestamp assign_ts(std::optional<Timestamp> ts);
  static void insert_sorted(VersionList& versions, Cell cell);
  void write_locked(const ColumnPath& path, Cell cell);

  mutable std::shared_mutex mutex_;
  WallClock wall_clock_;
  LogicalClock clock_;
  std::map<std::string, Table, std::less<>> tables_;
};

}  // namespace robostore
