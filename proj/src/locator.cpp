#include "robostore/locator.hpp"

#include <charconv>
#include <sstream>

#include "robostore/error.hpp"

namespace robostore::location {

namespace {

std::string encode_field(std::string_view raw) {
  if (raw.empty()) return "-";
  if (raw == "-") return "%2D";
  return escape_component(raw);
}

std::string decode_field(std::string_view text) {
  if (text == "-") return {};
  auto out = unescape_component(text);
  if (!out) throw Error(ErrorCode::kParseError, "bad escaped field: " + std::string(text));
  return *out;
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::kRoot: return "root";
    case Level::kMeta: return "meta";
    case Level::kUser: return "user";
  }
  return "?";
}

TabletHierarchy::TabletHierarchy(ServerId root_server) : root_server_(std::move(root_server)) {}

void TabletHierarchy::add_table(const std::string& table, ServerId meta_server,
                                const std::vector<std::pair<Bytes, ServerId>>& splits) {
  if (tables_.contains(table)) throw Error(ErrorCode::kDuplicateTable, table);
  if (splits.empty() || !splits.front().first.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "first tablet of " + table + " must start at the empty key");
  }
  TableEntry e;
  e.meta_server = std::move(meta_server);
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (i > 0 && splits[i].first <= splits[i - 1].first) {
      throw Error(ErrorCode::kInvalidConfig, "split keys of " + table + " must be strictly increasing");
    }
    const Bytes end = i + 1 < splits.size() ? splits[i + 1].first : Bytes{};
    e.tablets.emplace(splits[i].first, std::make_pair(end, splits[i].second));
  }
  tables_.emplace(table, std::move(e));
}

std::vector<std::string> TabletHierarchy::tables() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tables_) out.push_back(name);
  return out;
}

const TabletHierarchy::TableEntry& TabletHierarchy::entry(const std::string& table) const {
  auto it = tables_.find(table);
  if (it == tables_.end()) throw Error(ErrorCode::kUnknownTable, table);
  return it->second;
}

void TabletHierarchy::move_tablet(const TabletRange& range, const ServerId& new_node) {
  auto t = tables_.find(range.table);
  if (t == tables_.end()) throw Error(ErrorCode::kUnknownRange, range.table);
  auto it = t->second.tablets.find(range.start_key);
  if (it == t->second.tablets.end() || it->second.first != range.end_key) {
    throw Error(ErrorCode::kUnknownRange, range.table + " [" + escape_component(range.start_key) + ", " +
                                              escape_component(range.end_key) + ")");
  }
  it->second.second = new_node;
}

std::vector<TabletLocation> TabletHierarchy::user_tablets(const std::string& table) const {
  std::vector<TabletLocation> out;
  for (const auto& [start, v] : entry(table).tablets) {
    out.push_back({TabletRange{table, start, v.first}, v.second, Level::kUser});
  }
  return out;
}

std::optional<TabletLocation> TabletHierarchy::meta_tablet(const std::string& table) const {
  auto it = tables_.find(table);
  if (it == tables_.end()) return std::nullopt;
  return TabletLocation{TabletRange{table, {}, {}}, it->second.meta_server, Level::kMeta};
}

const ServerId& TabletHierarchy::read_root_pointer() const {
  if (!root_reachable_) throw Error(ErrorCode::kUnavailable, "root pointer unreachable");
  return root_server_;
}

std::optional<TabletLocation> TabletHierarchy::ask_root(const ServerId& asked, const std::string& table) const {
  if (asked != root_server_) return std::nullopt;
  entry(table);
  return meta_tablet(table);
}

std::optional<TabletLocation> TabletHierarchy::ask_meta(const ServerId& asked, const std::string& table,
                                                        std::string_view key) const {
  const TableEntry& e = entry(table);
  if (asked != e.meta_server) return std::nullopt;
  auto it = e.tablets.upper_bound(Bytes(key));
  --it;  // the first tablet starts at "", so this is always valid
  return TabletLocation{TabletRange{table, it->first, it->second.first}, it->second.second, Level::kUser};
}

bool TabletHierarchy::serves(const ServerId& asked, const TabletRange& range) const {
  auto t = tables_.find(range.table);
  if (t == tables_.end()) return false;
  auto it = t->second.tablets.find(range.start_key);
  return it != t->second.tablets.end() && it->second.first == range.end_key && it->second.second == asked;
}

const QueryLogEntry& QueryLog::append(std::string table, Bytes row_key, TabletLocation resolved) {
  entries_.push_back({std::move(table), std::move(row_key), std::move(resolved), next_ts_++});
  return entries_.back();
}

void QueryLog::append_raw(QueryLogEntry entry) {
  next_ts_ = std::max(next_ts_, entry.ts + 1);
  entries_.push_back(std::move(entry));
}

std::string QueryLog::to_text() const {
  std::string out;
  for (const auto& e : entries_) {
    out += "LOG " + std::to_string(e.ts) + ' ' + encode_field(e.table) + ' ' + encode_field(e.row_key) + ' ' +
           encode_field(e.resolved.range.start_key) + ' ' + encode_field(e.resolved.range.end_key) + ' ' +
           encode_field(e.resolved.node) + '\n';
  }
  return out;
}

QueryLog QueryLog::parse(std::string_view text) {
  QueryLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream words(line);
    std::vector<std::string> f;
    for (std::string w; words >> w;) f.push_back(w);
    if (f.empty()) continue;
    if (f.size() != 7 || f[0] != "LOG") {
      throw Error(ErrorCode::kParseError, "query log line " + std::to_string(line_no) + " is malformed");
    }
    std::uint64_t ts = 0;
    auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), ts);
    if (ec != std::errc{} || ptr != f[1].data() + f[1].size()) {
      throw Error(ErrorCode::kParseError, "query log line " + std::to_string(line_no) + " has a bad stamp");
    }
    const std::string table = decode_field(f[2]);
    log.append_raw(QueryLogEntry{
        table, decode_field(f[3]),
        TabletLocation{TabletRange{table, decode_field(f[4]), decode_field(f[5])}, decode_field(f[6]), Level::kUser},
        ts});
  }
  return log;
}

std::optional<TabletLocation> LocationCache::lookup(const std::string& table, std::string_view key) const {
  // Ranges of one table never overlap, so the candidate is the last range
  // starting at or before the key.
  auto it = entries_.upper_bound(TabletRange{table, Bytes(key), Bytes(1, '\xff')});
  while (it != entries_.begin()) {
    --it;
    if (it->first.table != table) break;
    if (it->first.contains(key)) return it->second;
    if (it->first.start_key <= key) break;
  }
  return std::nullopt;
}

void LocationCache::insert(const TabletLocation& location) {
  // Drop cached ranges of the same table that overlap the new one.
  for (auto it = entries_.begin(); it != entries_.end();) {
    const auto& r = it->first;
    const auto& n = location.range;
    const bool overlap = r.table == n.table && (n.end_key.empty() || r.start_key < n.end_key) &&
                         (r.end_key.empty() || n.start_key < r.end_key);
    it = overlap ? entries_.erase(it) : std::next(it);
  }
  entries_[location.range] = location;
}

std::vector<TabletLocation> LocationCache::entries() const {
  std::vector<TabletLocation> out;
  for (const auto& [_, loc] : entries_) out.push_back(loc);
  return out;
}

LocateResult LocatorClient::locate(const std::string& table, const Bytes& row_key) {
  LocateResult result;
  if (auto cached = cache_.lookup(table, row_key)) {
    if (hierarchy_->serves(cached->node, cached->range)) {
      ++hits_;
      result.cache_hit = true;
      result.location = *cached;
      return result;
    }
    // NotMine: the tablet has moved since we cached it.
    result.stale_hit = true;
    cache_.erase(cached->range);
  }
  ++misses_;
  if (!hierarchy_->has_table(table)) throw Error(ErrorCode::kUnknownTable, table);

  const ServerId& root = hierarchy_->read_root_pointer();
  result.hops.push_back({Level::kRoot, root});
  auto meta = hierarchy_->ask_root(root, table);
  if (!meta) throw Error(ErrorCode::kUnavailable, "root pointer names a server without the root tablet");

  result.hops.push_back({Level::kMeta, meta->node});
  auto user = hierarchy_->ask_meta(meta->node, table, row_key);
  if (!user) throw Error(ErrorCode::kUnavailable, "meta tablet moved during lookup");

  result.hops.push_back({Level::kUser, user->node});
  if (!hierarchy_->serves(user->node, user->range)) {
    throw Error(ErrorCode::kUnavailable, "user tablet moved during lookup");
  }
  result.location = *user;
  cache_.insert(*user);
  if (log_ != nullptr) log_->append(table, row_key, *user);
  return result;
}

std::size_t LocatorClient::warm_from_log(const QueryLog& log) {
  std::map<TabletRange, const QueryLogEntry*> newest;
  for (const auto& e : log.entries()) {
    auto& slot = newest[e.resolved.range];
    if (slot == nullptr || e.ts > slot->ts) slot = &e;
  }
  for (const auto& [_, e] : newest) cache_.insert(e->resolved);
  return newest.size();
}

}  // namespace robostore::location
