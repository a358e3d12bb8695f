#pragma once

// Checks a finished TxnCluster run without reusing any of its logic: replays
// committed transactions one at a time in commit-timestamp order.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "robostore/storage.hpp"
#include "robostore/txn/cloudtps.hpp"

namespace robostore::testing {

using State = std::map<std::string, std::optional<Bytes>>;

inline State snapshot(const Store& store, const std::vector<ColumnPath>& items) {
  State s;
  for (const auto& p : items) {
    auto c = store.get_latest(p);
    s[p.to_string()] = c ? std::optional<Bytes>(c->value) : std::nullopt;
  }
  return s;
}

struct Verdict {
  bool atomic = true;
  bool serializable = true;
  bool durable = true;
  std::string detail;
  bool ok() const { return atomic && serializable && durable; }
};

// `initial` holds the latest value of every item before the run, and
// `initial_versions` every stored version ts, so pre-existing data is not
// mistaken for a stray write.
inline Verdict check_run(const txn::TxnCluster& cluster, const Store& store, const std::vector<ColumnPath>& items,
                         const State& initial, const std::set<std::pair<std::string, std::string>>& initial_versions) {
  Verdict v;
  const auto& hist = cluster.history();

  // Decisions never flip.
  std::map<txn::TxnId, bool> decided;
  for (const auto& d : cluster.decisions()) {
    auto [it, fresh] = decided.emplace(d.id, d.commit);
    if (!fresh && it->second != d.commit) {
      v.durable = false;
      v.detail += "decision flipped for " + d.id.to_string() + "; ";
    }
  }

  // Every stored version belongs to the initial data or to a committed txn
  // that wrote exactly that value there at its commit ts.
  std::map<std::pair<std::string, std::string>, Bytes> expected;
  for (const auto& h : hist) {
    for (const auto& [path, value] : h.writes) expected[{path, h.commit_ts.to_string()}] = value;
  }
  for (const auto& p : items) {
    const std::string key = p.to_string();
    for (const auto& cell : store.versions(p)) {
      const std::pair<std::string, std::string> id{key, cell.ts.to_string()};
      if (initial_versions.contains(id)) continue;
      auto it = expected.find(id);
      if (it == expected.end() || cell.tombstone || it->second != cell.value) {
        v.atomic = false;
        v.detail += "stray version " + key + "@" + id.second + "; ";
      }
    }
  }
  for (const auto& [id, value] : expected) {
    auto p = ColumnPath::parse(id.first);
    auto cell = store.get_at(*p, *Timestamp::parse(id.second));
    if (!cell || cell->ts.to_string() != id.second || cell->value != value) {
      v.atomic = false;
      v.detail += "missing write " + id.first + "@" + id.second + "; ";
    }
  }

  // Serial replay in commit-ts order.
  std::vector<const txn::CommitRecord*> order;
  for (const auto& h : hist) order.push_back(&h);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->commit_ts < b->commit_ts; });
  State state = initial;
  for (const auto* h : order) {
    for (const auto& [path, seen] : h->reads) {
      const auto want = state.count(path) ? state[path] : std::nullopt;
      const auto got = seen ? std::optional<Bytes>(seen->value) : std::nullopt;
      if (want != got) {
        v.serializable = false;
        v.detail += h->id.to_string() + " read " + path + " out of order; ";
      }
    }
    for (const auto& [path, value] : h->writes) state[path] = value;
  }
  if (state != snapshot(store, items)) {
    // Items never touched by the run are in both maps, so plain equality works.
    v.serializable = false;
    v.detail += "final state differs from serial replay; ";
  }
  return v;
}

inline std::set<std::pair<std::string, std::string>> version_ids(const Store& store,
                                                                 const std::vector<ColumnPath>& items) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : items) {
    for (const auto& c : store.versions(p)) out.insert({p.to_string(), c.ts.to_string()});
  }
  return out;
}

}  // namespace robostore::testing
