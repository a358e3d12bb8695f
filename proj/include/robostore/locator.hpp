#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robostore/storage.hpp"

namespace robostore::location {

using ServerId = std::string;

enum class Level { kRoot, kMeta, kUser };
std::string_view to_string(Level level);

struct TabletRange {
  std::string table;
  Bytes start_key;  // inclusive
  Bytes end_key;    // exclusive, empty = unbounded

  bool contains(std::string_view key) const {
    return key >= start_key && (end_key.empty() || key < end_key);
  }
  friend auto operator<=>(const TabletRange&, const TabletRange&) = default;
  friend bool operator==(const TabletRange&, const TabletRange&) = default;
};

struct TabletLocation {
  TabletRange range;
  ServerId node;
  Level level = Level::kUser;

  friend bool operator==(const TabletLocation&, const TabletLocation&) = default;
};

// Authoritative three-level layout: a root pointer record (the lock-service
// file) names the root tablet's server, the root tablet maps each table to
// its meta tablet, and each meta tablet maps row ranges to user tablets.
// Servers answer only for tablets they hold.
class TabletHierarchy {
 public:
  explicit TabletHierarchy(ServerId root_server);

  // `splits` gives (start key, server) pairs; the first start key must be
  // empty and the rest strictly increasing, so the ranges tile the key space.
  void add_table(const std::string& table, ServerId meta_server,
                 const std::vector<std::pair<Bytes, ServerId>>& splits);
  bool has_table(std::string_view table) const { return tables_.find(std::string(table)) != tables_.end(); }
  std::vector<std::string> tables() const;

  // Caches are not told.
  void move_tablet(const TabletRange& range, const ServerId& new_node);

  std::vector<TabletLocation> user_tablets(const std::string& table) const;
  std::optional<TabletLocation> meta_tablet(const std::string& table) const;
  const ServerId& root_server() const { return root_server_; }

  // Server-side answers. Each returns nullopt when `asked` does not hold the
  // tablet in question (NotMine).
  const ServerId& read_root_pointer() const;  // throws Unavailable when cut off
  std::optional<TabletLocation> ask_root(const ServerId& asked, const std::string& table) const;
  std::optional<TabletLocation> ask_meta(const ServerId& asked, const std::string& table, std::string_view key) const;
  bool serves(const ServerId& asked, const TabletRange& range) const;

  void set_root_reachable(bool reachable) { root_reachable_ = reachable; }

 private:
  struct TableEntry {
    ServerId meta_server;
    std::map<Bytes, std::pair<Bytes, ServerId>> tablets;  // start -> (end, server)
  };
  const TableEntry& entry(const std::string& table) const;

  ServerId root_server_;
  bool root_reachable_ = true;
  std::map<std::string, TableEntry> tables_;
};

struct QueryLogEntry {
  std::string table;
  Bytes row_key;
  TabletLocation resolved;
  std::uint64_t ts = 0;

  friend bool operator==(const QueryLogEntry&, const QueryLogEntry&) = default;
};

// Append-only record of past resolutions.
class QueryLog {
 public:
  // Stamps the entry with the next sequence number.
  const QueryLogEntry& append(std::string table, Bytes row_key, TabletLocation resolved);
  // Keeps the caller's stamp; later appends continue above it.
  void append_raw(QueryLogEntry entry);
  const std::vector<QueryLogEntry>& entries() const { return entries_; }

  // One "LOG <ts> <table> <row> <start> <end> <node>" line per entry; fields
  // use path escaping, "-" for empty.
  std::string to_text() const;
  static QueryLog parse(std::string_view text);

 private:
  std::vector<QueryLogEntry> entries_;
  std::uint64_t next_ts_ = 1;
};

struct Hop {
  Level level;
  ServerId node;
};

struct LocateResult {
  TabletLocation location;
  std::vector<Hop> hops;
  bool cache_hit = false;
  bool stale_hit = false;
};

// Per-client cache of user-tablet locations. Entries may go stale; they are
// only ever filled from real resolutions or the query log.
class LocationCache {
 public:
  std::optional<TabletLocation> lookup(const std::string& table, std::string_view key) const;
  void insert(const TabletLocation& location);
  void erase(const TabletRange& range) { entries_.erase(range); }
  std::size_t size() const { return entries_.size(); }
  std::vector<TabletLocation> entries() const;

 private:
  std::map<TabletRange, TabletLocation> entries_;
};

class LocatorClient {
 public:
  explicit LocatorClient(const TabletHierarchy& hierarchy, QueryLog* log = nullptr)
      : hierarchy_(&hierarchy), log_(log) {}

  // Cache hit: zero hops, unless the cached server answers NotMine, in which
  // case the entry is dropped and the full root -> meta -> user walk runs.
  LocateResult locate(const std::string& table, const Bytes& row_key);

  // Preloads the newest logged resolution of every range; returns how many.
  std::size_t warm_from_log(const QueryLog& log);

  const LocationCache& cache() const { return cache_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  const TabletHierarchy* hierarchy_;
  QueryLog* log_;
  LocationCache cache_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace robostore::location
