#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "robostore/sim/core.hpp"
#include "robostore/storage.hpp"

namespace robostore::sim {

enum class ConsistencyMode { kCP, kAP };

struct SimConfig {
  std::size_t node_count = 3;
  std::size_t replication_factor = 1;
  ConsistencyMode mode = ConsistencyMode::kCP;
  std::uint64_t seed = 1;
  double drop_probability = 0.0;
  Tick min_delay = 1;
  Tick max_delay = 3;
  Tick op_timeout = 20;
  Tick retry_interval = 2;
  Tick anti_entropy_period = 10;  // 0 disables periodic rounds

  // Throws Error(kInvalidConfig).
  void validate() const;
};

struct NodeState {
  NodeId id = 0;
  std::set<std::size_t> owned_shards;
  std::set<std::size_t> replica_of;
  bool alive = true;
  std::size_t partition_group = 0;
};

enum class OpStatus { kOk, kUnavailable };

struct WriteResult {
  OpStatus status = OpStatus::kUnavailable;
  Timestamp ts;
};

struct ReadResult {
  OpStatus status = OpStatus::kUnavailable;
  std::optional<Bytes> value;
  Timestamp ts;  // version returned, 0 when absent
};

// In-process replicated key-value cluster. Key k lives in shard
// hash(k) mod n, owned by node shard and replicated on the next R-1 nodes in
// ring order. CP mode runs majority-quorum writes and read-with-write-back
// reads over the shard's replica set; AP mode accepts any reachable replica
// and relies on anti-entropy (last-write-wins, node id breaks ties) after
// partitions heal.
class Cluster {
 public:
  explicit Cluster(SimConfig config);

  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  const SimConfig& config() const { return config_; }
  std::size_t shard_of(std::string_view key) const;
  // Owner first.
  const std::vector<NodeId>& replicas_of_shard(std::size_t shard) const { return placement_[shard]; }
  NodeState node_state(NodeId id) const;

  WriteResult client_write(NodeId via, const std::string& key, const Bytes& value);
  ReadResult client_read(NodeId via, const std::string& key);

  void partition(const std::vector<std::vector<NodeId>>& groups);
  void heal();
  void tick(Tick n);

  // Runs one full round synchronously and returns the number of versions
  // that changed anywhere.
  std::size_t anti_entropy_round();
  std::size_t anti_entropy_rounds() const { return rounds_; }

  bool replicas_converged() const;
  // Every stored version on a node for one shard, newest first per key.
  std::string replica_dump(NodeId node, std::size_t shard) const;
  std::vector<Cell> replica_versions(NodeId node, const std::string& key) const;

  Tick now() const { return loop_.now(); }
  const Trace& trace() const { return trace_; }
  Trace& trace() { return trace_; }
  Network& network() { return net_; }

 private:
  struct Reply {
    std::optional<Cell> cell;
  };
  struct Replies {
    std::vector<std::pair<NodeId, Reply>> replies;
    bool ok = false;
  };

  Replies quorum_call(NodeId from, const std::vector<NodeId>& targets, std::size_t needed,
                      std::function<Reply(NodeId)> at_target);
  Timestamp next_ts(NodeId node, Timestamp at_least);
  ColumnPath key_path(const std::string& key) const;
  std::optional<Cell> head(NodeId node, const std::string& key) const;
  void apply(NodeId node, const std::string& key, const Cell& cell);
  std::size_t start_round();
  void schedule_periodic();
  std::string node_name(NodeId id) const { return "n" + std::to_string(id); }

  SimConfig config_;
  EventLoop loop_;
  Network net_;
  Trace trace_;
  std::vector<std::unique_ptr<Store>> stores_;
  std::vector<LogicalClock> clocks_;
  std::vector<std::vector<NodeId>> placement_;
  std::size_t rounds_ = 0;
  std::size_t merged_in_round_ = 0;
};

// Executes a scenario script against a cluster:
//   CLIENT n | WRITE k v | READ k | PARTITION a,b|c,d | HEAL | TICK n | SYNC
// Throws Error(kParseError) on malformed lines.
void run_scenario(Cluster& cluster, std::string_view script);

}  // namespace robostore::sim
