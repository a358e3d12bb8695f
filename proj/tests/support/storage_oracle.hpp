#pragma once

// Write-log replay model of a multi-version column.

#include <map>
#include <optional>
#include <vector>

#include "robostore/storage.hpp"

namespace robostore::testing {

// Replays a write log with slot-overwrite semantics: the last write to a
// given (path, ts) wins, then the highest ts wins.
struct LogOracle {
  struct Entry {
    Timestamp ts;
    bool tombstone;
    Bytes value;
  };
  std::map<ColumnPath, std::vector<Entry>> log;

  void record(const ColumnPath& p, Timestamp ts, bool tombstone, Bytes value) {
    log[p].push_back({ts, tombstone, std::move(value)});
  }

  std::map<Timestamp, Entry> slots(const ColumnPath& p) const {
    std::map<Timestamp, Entry> out;
    auto it = log.find(p);
    if (it == log.end()) return out;
    for (const auto& e : it->second) out[e.ts] = e;
    return out;
  }

  std::optional<Bytes> latest(const ColumnPath& p) const {
    auto s = slots(p);
    if (s.empty() || s.rbegin()->second.tombstone) return std::nullopt;
    return s.rbegin()->second.value;
  }

  std::optional<Bytes> at(const ColumnPath& p, Timestamp ts) const {
    std::optional<Entry> best;
    for (const auto& [t, e] : slots(p)) {
      if (t <= ts) best = e;
    }
    if (!best || best->tombstone) return std::nullopt;
    return best->value;
  }
};

}  // namespace robostore::testing
