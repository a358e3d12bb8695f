#include "robostore/sim/cluster.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "robostore/error.hpp"

namespace robostore::sim {

namespace {

constexpr const char* kTable = "kv";
constexpr const char* kFamily = "data";
constexpr const char* kColumn = "v";

std::string describe(const std::optional<Cell>& cell) {
  if (!cell || cell->tombstone) return "ABSENT";
  return cell->value;
}

}  // namespace

void SimConfig::validate() const {
  if (node_count == 0 || node_count > 256) throw Error(ErrorCode::kInvalidConfig, "node_count must be in [1,256]");
  if (replication_factor < 1 || replication_factor > node_count) {
    throw Error(ErrorCode::kInvalidConfig, "replication factor must be in [1,node_count]");
  }
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw Error(ErrorCode::kInvalidConfig, "drop probability must be in [0,1]");
  }
  if (min_delay < 1 || min_delay > max_delay) throw Error(ErrorCode::kInvalidConfig, "need 1 <= min_delay <= max_delay");
  if (op_timeout == 0 || retry_interval == 0) throw Error(ErrorCode::kInvalidConfig, "timeouts must be positive");
}

Cluster::Cluster(SimConfig config)
    : config_((config.validate(), config)),
      net_(loop_, config.node_count, NetConfig{config.drop_probability, config.min_delay, config.max_delay},
           config.seed),
      clocks_(config.node_count) {
  for (std::size_t i = 0; i < config_.node_count; ++i) {
    auto store = std::make_unique<Store>();
    store->create_table(kTable, {{kFamily, false}});
    stores_.push_back(std::move(store));
  }
  // All nodes are alive at spawn, so "next alive" is plain ring order.
  for (std::size_t shard = 0; shard < config_.node_count; ++shard) {
    std::vector<NodeId> set;
    for (std::size_t k = 0; k < config_.replication_factor; ++k) {
      set.push_back(static_cast<NodeId>((shard + k) % config_.node_count));
    }
    placement_.push_back(std::move(set));
  }
  schedule_periodic();
}

std::size_t Cluster::shard_of(std::string_view key) const { return hash_key(key) % config_.node_count; }

NodeState Cluster::node_state(NodeId id) const {
  NodeState st;
  st.id = id;
  st.alive = net_.alive(id);
  st.partition_group = net_.group_of(id);
  for (std::size_t shard = 0; shard < placement_.size(); ++shard) {
    const auto& set = placement_[shard];
    if (set.front() == id) st.owned_shards.insert(shard);
    if (std::find(set.begin() + 1, set.end(), id) != set.end()) st.replica_of.insert(shard);
  }
  return st;
}

ColumnPath Cluster::key_path(const std::string& key) const {
  return ColumnPath{kTable, key, kFamily, std::nullopt, kColumn};
}

std::optional<Cell> Cluster::head(NodeId node, const std::string& key) const {
  return stores_[node]->head(key_path(key));
}

void Cluster::apply(NodeId node, const std::string& key, const Cell& cell) {
  const auto path = key_path(key);
  const auto versions = stores_[node]->versions(path);
  const bool known = std::any_of(versions.begin(), versions.end(), [&](const Cell& c) { return c == cell; });
  if (!known) {
    stores_[node]->insert_version(path, cell);
    ++merged_in_round_;
  }
}

Timestamp Cluster::next_ts(NodeId node, Timestamp at_least) {
  // Logical microseconds in the high bits, node id in the low byte.
  const uint128 wall = static_cast<uint128>(loop_.now()) * 1000;
  const uint128 floor = std::max(wall, (at_least.value() >> 8) + 1);
  const Timestamp logical = clocks_[node].next(Timestamp{floor});
  return Timestamp{(logical.value() << 8) | node};
}

Cluster::Replies Cluster::quorum_call(NodeId from, const std::vector<NodeId>& targets, std::size_t needed,
                                      std::function<Reply(NodeId)> at_target) {
  struct State {
    std::set<NodeId> responded;
    std::vector<std::pair<NodeId, Reply>> replies;
  };
  auto state = std::make_shared<State>();
  const Tick deadline = loop_.now() + config_.op_timeout;
  while (true) {
    for (NodeId t : targets) {
      if (state->responded.contains(t)) continue;
      net_.send(from, t, [this, state, t, from, at_target] {
        Reply reply = at_target(t);
        net_.send(t, from, [state, t, reply] {
          if (state->responded.insert(t).second) state->replies.emplace_back(t, reply);
        });
      });
    }
    const Tick wake = std::min(loop_.now() + config_.retry_interval, deadline);
    if (loop_.run_until_true([&] { return state->responded.size() >= needed; }, wake)) {
      return Replies{state->replies, true};
    }
    if (loop_.now() >= deadline) return Replies{state->replies, false};
  }
}

WriteResult Cluster::client_write(NodeId via, const std::string& key, const Bytes& value) {
  const auto& replicas = placement_[shard_of(key)];
  const std::string who = node_name(via);
  WriteResult result;
  if (config_.mode == ConsistencyMode::kCP) {
    const std::size_t majority = replicas.size() / 2 + 1;
    auto query = quorum_call(via, replicas, majority, [this, key](NodeId t) { return Reply{head(t, key)}; });
    if (!query.ok) {
      trace_.add(now(), who, "WRITE " + key + "=" + value + " UNAVAILABLE");
      return result;
    }
    Timestamp seen{};
    for (const auto& [_, r] : query.replies) {
      if (r.cell) seen = std::max(seen, r.cell->ts);
    }
    const Cell cell{value, next_ts(via, seen), false};
    auto store = quorum_call(via, replicas, majority, [this, key, cell](NodeId t) {
      apply(t, key, cell);
      return Reply{};
    });
    if (!store.ok) {
      trace_.add(now(), who, "WRITE " + key + "=" + value + " UNAVAILABLE");
      return result;
    }
    result = {OpStatus::kOk, cell.ts};
  } else {
    const Cell cell{value, next_ts(via, Timestamp{}), false};
    auto store = quorum_call(via, replicas, 1, [this, key, cell](NodeId t) {
      apply(t, key, cell);
      return Reply{};
    });
    if (!store.ok) {
      trace_.add(now(), who, "WRITE " + key + "=" + value + " UNAVAILABLE");
      return result;
    }
    result = {OpStatus::kOk, cell.ts};
  }
  trace_.add(now(), who, "WRITE " + key + "=" + value + " OK ts=" + result.ts.to_string());
  return result;
}

ReadResult Cluster::client_read(NodeId via, const std::string& key) {
  const auto& replicas = placement_[shard_of(key)];
  const std::string who = node_name(via);
  const bool cp = config_.mode == ConsistencyMode::kCP;
  const std::size_t needed = cp ? replicas.size() / 2 + 1 : 1;
  auto query = quorum_call(via, replicas, needed, [this, key](NodeId t) { return Reply{head(t, key)}; });
  ReadResult result;
  if (!query.ok) {
    trace_.add(now(), who, "READ " + key + " UNAVAILABLE");
    return result;
  }
  std::optional<Cell> best;
  for (const auto& [_, r] : query.replies) {
    if (r.cell && (!best || r.cell->ts > best->ts)) best = r.cell;
  }
  if (cp && best) {
    // Write back so no later quorum read can return an older version.
    const Cell cell = *best;
    auto back = quorum_call(via, replicas, needed, [this, key, cell](NodeId t) {
      apply(t, key, cell);
      return Reply{};
    });
    if (!back.ok) {
      trace_.add(now(), who, "READ " + key + " UNAVAILABLE");
      return result;
    }
  }
  result.status = OpStatus::kOk;
  if (best && !best->tombstone) {
    result.value = best->value;
    result.ts = best->ts;
  }
  trace_.add(now(), who,
             "READ " + key + " -> " + describe(best) + (result.value ? " ts=" + result.ts.to_string() : ""));
  return result;
}

void Cluster::partition(const std::vector<std::vector<NodeId>>& groups) {
  net_.partition(groups);
  std::string spec;
  for (const auto& g : groups) {
    if (!spec.empty()) spec += '|';
    for (std::size_t i = 0; i < g.size(); ++i) spec += (i ? "," : "") + std::to_string(g[i]);
  }
  trace_.add(now(), "sim", "PARTITION " + spec);
}

void Cluster::heal() {
  net_.heal();
  trace_.add(now(), "sim", "HEAL");
  loop_.schedule_after(0, [this] { start_round(); });
}

void Cluster::tick(Tick n) { loop_.run_until(loop_.now() + n); }

std::size_t Cluster::start_round() {
  const std::size_t round = ++rounds_;
  std::size_t sent = 0;
  for (std::size_t shard = 0; shard < placement_.size(); ++shard) {
    const auto& replicas = placement_[shard];
    if (replicas.size() < 2) continue;
    for (NodeId from : replicas) {
      std::vector<std::pair<std::string, Cell>> digest;
      stores_[from]->for_each_column(kTable, [&](const ColumnPath& p, std::span<const Cell> versions) {
        if (shard_of(p.row_key) != shard) return;
        for (const Cell& c : versions) digest.emplace_back(p.row_key, c);
      });
      for (NodeId to : replicas) {
        if (to == from) continue;
        ++sent;
        net_.send(
            from, to,
            [this, from, to, round, digest] {
              const std::size_t before = merged_in_round_;
              for (const auto& [key, cell] : digest) apply(to, key, cell);
              if (merged_in_round_ != before) {
                trace_.add(now(), node_name(to),
                           "ANTI-ENTROPY round=" + std::to_string(round) + " from=" + node_name(from) +
                               " merged=" + std::to_string(merged_in_round_ - before));
              }
            },
            /*reliable=*/true);
      }
    }
  }
  return sent;
}

std::size_t Cluster::anti_entropy_round() {
  const std::size_t before = merged_in_round_;
  start_round();
  loop_.run_until(loop_.now() + config_.max_delay);
  return merged_in_round_ - before;
}

void Cluster::schedule_periodic() {
  if (config_.anti_entropy_period == 0) return;
  loop_.schedule_after(config_.anti_entropy_period, [this] {
    start_round();
    schedule_periodic();
  });
}

std::string Cluster::replica_dump(NodeId node, std::size_t shard) const {
  std::string out;
  stores_[node]->for_each_column(kTable, [&](const ColumnPath& p, std::span<const Cell> versions) {
    if (shard_of(p.row_key) != shard) return;
    for (const Cell& c : versions) {
      out += p.row_key + ' ' + c.ts.to_string() + ' ' + (c.tombstone ? "~" : "=" + c.value) + '\n';
    }
  });
  return out;
}

std::vector<Cell> Cluster::replica_versions(NodeId node, const std::string& key) const {
  return stores_[node]->versions(key_path(key));
}

bool Cluster::replicas_converged() const {
  for (std::size_t shard = 0; shard < placement_.size(); ++shard) {
    const auto& replicas = placement_[shard];
    const std::string first = replica_dump(replicas.front(), shard);
    for (std::size_t i = 1; i < replicas.size(); ++i) {
      if (replica_dump(replicas[i], shard) != first) return false;
    }
  }
  return true;
}

void run_scenario(Cluster& cluster, std::string_view script) {
  NodeId client = 0;
  auto number = [](const Statement& st, std::size_t i) {
    if (st.args.size() <= i) throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": missing argument");
    std::uint64_t v = 0;
    const auto& a = st.args[i];
    auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), v);
    if (ec != std::errc{} || ptr != a.data() + a.size()) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": expected a number, got " + a);
    }
    return v;
  };
  auto arity = [](const Statement& st, std::size_t n) {
    if (st.args.size() != n) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(st.line) + ": " + st.verb + " takes " + std::to_string(n) + " argument(s)");
    }
  };
  for (const Statement& st : parse_script(script)) {
    if (st.verb == "CLIENT") {
      arity(st, 1);
      client = static_cast<NodeId>(number(st, 0));
      if (client >= cluster.config().node_count) throw Error(ErrorCode::kParseError, "unknown node " + st.args[0]);
    } else if (st.verb == "WRITE") {
      arity(st, 2);
      cluster.client_write(client, st.args[0], st.args[1]);
    } else if (st.verb == "READ") {
      arity(st, 1);
      cluster.client_read(client, st.args[0]);
    } else if (st.verb == "PARTITION") {
      arity(st, 1);
      cluster.partition(parse_groups(st.args[0]));
    } else if (st.verb == "HEAL") {
      arity(st, 0);
      cluster.heal();
    } else if (st.verb == "TICK") {
      arity(st, 1);
      cluster.tick(number(st, 0));
    } else if (st.verb == "SYNC") {
      arity(st, 0);
      cluster.anti_entropy_round();
    } else {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": unknown verb " + st.verb);
    }
  }
}

}  // namespace robostore::sim
