#include "robostore/storage.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "robostore/error.hpp"

namespace robostore {

namespace {

bool needs_escape(unsigned char c) { return c == '%' || c == '/' || c <= 0x20 || c >= 0x7f; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<std::string_view> split_slash(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find('/', start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string escape_component(std::string_view raw) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (needs_escape(c)) {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

std::optional<std::string> unescape_component(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '%') {
      out.push_back(text[i]);
      continue;
    }
    if (i + 2 >= text.size()) return std::nullopt;
    const int hi = hex_value(text[i + 1]);
    const int lo = hex_value(text[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<char>(hi * 16 + lo));
    i += 2;
  }
  return out;
}

std::string ColumnPath::to_string() const {
  std::string out = escape_component(table);
  out += '/';
  out += escape_component(row_key);
  out += '/';
  out += escape_component(family);
  if (super_key) {
    out += '/';
    out += escape_component(*super_key);
  }
  out += '/';
  out += escape_component(column);
  return out;
}

std::optional<ColumnPath> ColumnPath::parse(std::string_view text) {
  const auto parts = split_slash(text);
  if (parts.size() != 4 && parts.size() != 5) return std::nullopt;
  std::vector<std::string> decoded;
  for (auto part : parts) {
    auto d = unescape_component(part);
    if (!d) return std::nullopt;
    decoded.push_back(std::move(*d));
  }
  ColumnPath path;
  path.table = decoded[0];
  path.row_key = decoded[1];
  path.family = decoded[2];
  if (decoded.size() == 5) {
    path.super_key = decoded[3];
    path.column = decoded[4];
  } else {
    path.column = decoded[3];
  }
  if (path.table.empty() || path.family.empty()) return std::nullopt;
  return path;
}

const FamilySpec* TableSchema::find_family(std::string_view family) const {
  for (const auto& f : families) {
    if (f.name == family) return &f;
  }
  return nullptr;
}

Store::Store(WallClock wall_clock) : wall_clock_(std::move(wall_clock)) {}

TableSchema Store::create_table(const std::string& name, std::vector<FamilySpec> families) {
  std::unique_lock lock(mutex_);
  if (tables_.contains(name)) throw Error(ErrorCode::kDuplicateTable, name);
  if (families.empty()) throw Error(ErrorCode::kEmptyFamilyList, name);
  std::set<std::string> seen;
  for (const auto& f : families) {
    if (f.name.empty() || !seen.insert(f.name).second) {
      throw Error(ErrorCode::kInvalidConfig, "family names must be unique and non-empty: " + f.name);
    }
  }
  Table table;
  table.schema.name = name;
  table.schema.families = std::move(families);
  table.schema.created_at = assign_ts(std::nullopt);
  auto schema = table.schema;
  tables_.emplace(name, std::move(table));
  return schema;
}

bool Store::has_table(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return tables_.find(name) != tables_.end();
}

std::optional<TableSchema> Store::schema(std::string_view name) const {
  std::shared_lock lock(mutex_);
  auto it = tables_.find(name);
  if (it == tables_.end()) return std::nullopt;
  return it->second.schema;
}

std::vector<std::string> Store::table_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> names;
  for (const auto& [name, _] : tables_) names.push_back(name);
  return names;
}

const Store::Table& Store::table_or_throw(std::string_view name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(ErrorCode::kUnknownTable, std::string(name));
  return it->second;
}

Store::Table& Store::table_or_throw(std::string_view name) {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(ErrorCode::kUnknownTable, std::string(name));
  return it->second;
}

void Store::validate_path(const Table& table, const ColumnPath& path) const {
  const FamilySpec* family = table.schema.find_family(path.family);
  if (family == nullptr) throw Error(ErrorCode::kUnknownFamily, path.table + "/" + path.family);
  if (family->is_super != path.super_key.has_value()) {
    throw Error(ErrorCode::kSuperKeyMismatch, path.to_string());
  }
}

Timestamp Store::assign_ts(std::optional<Timestamp> ts) {
  if (ts) {
    if (!ts->is_set()) throw Error(ErrorCode::kInvalidTimestamp, "explicit timestamp must be nonzero");
    clock_.observe(*ts);
    return *ts;
  }
  return clock_.next(wall_clock_ ? wall_clock_() : Timestamp{});
}

void Store::insert_sorted(VersionList& versions, Cell cell) {
  auto it = std::lower_bound(versions.begin(), versions.end(), cell.ts,
                             [](const Cell& c, Timestamp ts) { return c.ts > ts; });
  if (it != versions.end() && it->ts == cell.ts) {
    *it = std::move(cell);
  } else {
    versions.insert(it, std::move(cell));
  }
}

void Store::write_locked(const ColumnPath& path, Cell cell) {
  Table& table = table_or_throw(path.table);
  validate_path(table, path);
  auto& versions = table.rows[path.row_key][path.family][path.super_key.value_or("")][path.column];
  insert_sorted(versions, std::move(cell));
}

Timestamp Store::put(const ColumnPath& path, Bytes value, std::optional<Timestamp> ts) {
  std::unique_lock lock(mutex_);
  validate_path(table_or_throw(path.table), path);
  const Timestamp effective = assign_ts(ts);
  write_locked(path, Cell{std::move(value), effective, false});
  return effective;
}

Timestamp Store::erase(const ColumnPath& path, std::optional<Timestamp> ts) {
  std::unique_lock lock(mutex_);
  validate_path(table_or_throw(path.table), path);
  const Timestamp effective = assign_ts(ts);
  write_locked(path, Cell{Bytes{}, effective, true});
  return effective;
}

void Store::insert_version(const ColumnPath& path, Cell cell) {
  std::unique_lock lock(mutex_);
  if (!cell.ts.is_set()) throw Error(ErrorCode::kInvalidTimestamp, path.to_string());
  clock_.observe(cell.ts);
  write_locked(path, std::move(cell));
}

const Store::VersionList* Store::find_versions(const ColumnPath& path) const {
  const Table& table = table_or_throw(path.table);
  auto row = table.rows.find(path.row_key);
  if (row == table.rows.end()) return nullptr;
  auto fam = row->second.find(path.family);
  if (fam == row->second.end()) return nullptr;
  auto sup = fam->second.find(path.super_key.value_or(""));
  if (sup == fam->second.end()) return nullptr;
  auto col = sup->second.find(path.column);
  if (col == sup->second.end()) return nullptr;
  return &col->second;
}

std::optional<Cell> Store::get_latest(const ColumnPath& path) const {
  std::shared_lock lock(mutex_);
  const VersionList* versions = find_versions(path);
  if (versions == nullptr || versions->empty() || versions->front().tombstone) return std::nullopt;
  return versions->front();
}

std::optional<Cell> Store::get_at(const ColumnPath& path, Timestamp ts) const {
  std::shared_lock lock(mutex_);
  const VersionList* versions = find_versions(path);
  if (versions == nullptr) return std::nullopt;
  auto it = std::lower_bound(versions->begin(), versions->end(), ts,
                             [](const Cell& c, Timestamp t) { return c.ts > t; });
  if (it == versions->end() || it->tombstone) return std::nullopt;
  return *it;
}

std::optional<Cell> Store::head(const ColumnPath& path) const {
  std::shared_lock lock(mutex_);
  const VersionList* versions = find_versions(path);
  if (versions == nullptr || versions->empty()) return std::nullopt;
  return versions->front();
}

std::vector<Cell> Store::versions(const ColumnPath& path) const {
  std::shared_lock lock(mutex_);
  const VersionList* versions = find_versions(path);
  if (versions == nullptr) return {};
  return *versions;
}

std::vector<ScanRow> Store::scan(const std::string& table_name, const ScanFilter& filter) const {
  std::shared_lock lock(mutex_);
  const Table& table = table_or_throw(table_name);
  if (!filter.end_row.empty() && filter.start_row > filter.end_row) {
    throw Error(ErrorCode::kInvalidRange, "scan start > end");
  }
  if (filter.ts_window && filter.ts_window->first > filter.ts_window->second) {
    throw Error(ErrorCode::kInvalidRange, "timestamp window lo > hi");
  }

  auto matches_value = [&](const Cell& cell) {
    return !filter.value_equals || cell.value == *filter.value_equals;
  };

  std::vector<ScanRow> out;
  auto it = table.rows.lower_bound(filter.start_row);
  for (; it != table.rows.end(); ++it) {
    if (!filter.end_row.empty() && it->first >= filter.end_row) break;
    ScanRow row{it->first, {}};
    for (const auto& [family, supers] : it->second) {
      if (filter.family && *filter.family != family) continue;
      const bool is_super = table.schema.find_family(family)->is_super;
      for (const auto& [super_key, columns] : supers) {
        if (filter.super_key && (!is_super || *filter.super_key != super_key)) continue;
        for (const auto& [column, versions] : columns) {
          if (filter.column && *filter.column != column) continue;
          ColumnPath path{table_name, it->first, family,
                          is_super ? std::optional<std::string>(super_key) : std::nullopt, column};
          if (filter.ts_window) {
            for (const Cell& cell : versions) {
              if (cell.tombstone || cell.ts < filter.ts_window->first ||
                  cell.ts > filter.ts_window->second || !matches_value(cell)) {
                continue;
              }
              row.cells.push_back({path, cell});
            }
          } else if (!versions.empty() && !versions.front().tombstone && matches_value(versions.front())) {
            row.cells.push_back({std::move(path), versions.front()});
          }
        }
      }
    }
    if (!row.cells.empty()) {
      out.push_back(std::move(row));
      if (filter.limit != 0 && out.size() >= filter.limit) break;
    }
  }
  return out;
}

std::size_t Store::gc(const std::string& table_name, Timestamp watermark, bool keep_latest) {
  std::unique_lock lock(mutex_);
  Table& table = table_or_throw(table_name);
  std::size_t removed = 0;
  for (auto row_it = table.rows.begin(); row_it != table.rows.end();) {
    for (auto fam_it = row_it->second.begin(); fam_it != row_it->second.end();) {
      for (auto sup_it = fam_it->second.begin(); sup_it != fam_it->second.end();) {
        for (auto col_it = sup_it->second.begin(); col_it != sup_it->second.end();) {
          VersionList& versions = col_it->second;
          // A live newest version survives under keep_latest; a tombstone
          // below the watermark takes everything it shadows with it.
          const bool pin_head = keep_latest && !versions.empty() && !versions.front().tombstone;
          VersionList kept;
          for (std::size_t i = 0; i < versions.size(); ++i) {
            if (versions[i].ts >= watermark || (i == 0 && pin_head)) {
              kept.push_back(std::move(versions[i]));
            } else {
              ++removed;
            }
          }
          versions = std::move(kept);
          col_it = versions.empty() ? sup_it->second.erase(col_it) : std::next(col_it);
        }
        sup_it = sup_it->second.empty() ? fam_it->second.erase(sup_it) : std::next(sup_it);
      }
      fam_it = fam_it->second.empty() ? row_it->second.erase(fam_it) : std::next(fam_it);
    }
    row_it = row_it->second.empty() ? table.rows.erase(row_it) : std::next(row_it);
  }
  return removed;
}

void Store::for_each_column(const std::string& table_name,
                            const std::function<void(const ColumnPath&, std::span<const Cell>)>& fn) const {
  std::shared_lock lock(mutex_);
  const Table& table = table_or_throw(table_name);
  for (const auto& [row_key, families] : table.rows) {
    for (const auto& [family, supers] : families) {
      const bool is_super = table.schema.find_family(family)->is_super;
      for (const auto& [super_key, columns] : supers) {
        for (const auto& [column, versions] : columns) {
          ColumnPath path{table_name, row_key, family,
                          is_super ? std::optional<std::string>(super_key) : std::nullopt, column};
          fn(path, versions);
        }
      }
    }
  }
}

Timestamp Store::clock_reading() const {
  std::shared_lock lock(mutex_);
  return clock_.last();
}

}  // namespace robostore
