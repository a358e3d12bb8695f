#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "robostore/sim/core.hpp"
#include "robostore/storage.hpp"

namespace robostore::txn {

using LtmId = sim::NodeId;
using sim::Tick;

struct TxnId {
  LtmId ltm = 0;
  std::uint64_t seq = 0;

  std::string to_string() const;
  friend bool operator==(const TxnId&, const TxnId&) = default;
  friend std::strong_ordering operator<=>(const TxnId& a, const TxnId& b) {
    if (auto c = a.seq <=> b.seq; c != 0) return c;
    return a.ltm <=> b.ltm;
  }
};

// On the coordinator, kPrepared means phase one is under way.
enum class TxnState { kActive, kPrepared, kCommitted, kAborted };
std::string_view to_string(TxnState state);

struct TxnConfig {
  std::size_t ltm_count = 4;
  std::size_t replicas = 2;  // peers holding a copy of each LTM's state
  std::uint64_t seed = 1;
  double drop_probability = 0.0;
  Tick min_delay = 1;
  Tick max_delay = 3;
  Tick prepare_timeout = 10;
  Tick retry_interval = 2;
  Tick op_deadline = 200;  // how long commit() waits for completion

  void validate() const;
};

// Observer-side record of a commit decision, for checkers.
struct CommitRecord {
  TxnId id;
  Timestamp commit_ts;
  Tick decided_at = 0;
  std::optional<Tick> completed_at;                    // every participant applied
  std::map<std::string, std::optional<Cell>> reads;   // path -> what the txn saw
  std::map<std::string, Bytes> writes;
};

struct DecisionEvent {
  TxnId id;
  bool commit = false;
  Tick at = 0;
  std::optional<LtmId> participant;  // empty for the coordinator's own decision
};

// Local transaction managers over one shared Store. Items are sharded over
// LTMs by path hash; each LTM's transaction table is copied to the next
// `replicas` LTMs on every change, and whichever live group member holds a
// copy carries on when the owner is down.
class TxnCluster {
 public:
  TxnCluster(Store& store, TxnConfig config);
  TxnCluster(const TxnCluster&) = delete;
  TxnCluster& operator=(const TxnCluster&) = delete;

  TxnId begin(LtmId coordinator);
  std::optional<Cell> t_read(const TxnId& txn, const ColumnPath& path);
  void t_write(const TxnId& txn, const ColumnPath& path, Bytes value);

  // Starts two-phase commit and returns at once.
  void commit_async(const TxnId& txn);
  // Starts two-phase commit and runs the simulation until every participant
  // has the decision or op_deadline passes. Returns the coordinator's state.
  TxnState commit(const TxnId& txn);
  // Runs until the txn is decided and complete, or `deadline`.
  bool await(const TxnId& txn, Tick deadline);
  TxnState state(const TxnId& txn) const;

  // Straight from storage, never through an LTM.
  std::optional<Cell> consistent_read(const ColumnPath& path) const;

  void crash_ltm(LtmId id);
  void recover_ltm(LtmId id);
  bool ltm_alive(LtmId id) const;

  void partition(const std::vector<std::vector<LtmId>>& groups);
  void heal();

  void tick(Tick n);
  // Called after every message delivery with a running count; fault
  // injectors use it to crash or cut links at an exact protocol step.
  void set_delivery_hook(std::function<void(LtmId to, std::uint64_t count)> hook) {
    net_.set_delivery_hook(std::move(hook));
  }
  // Runs until no decided txn is still waiting on a participant.
  bool quiesce(Tick deadline);

  LtmId owner_of(const ColumnPath& path) const;
  std::vector<LtmId> group_of(LtmId shard) const;
  std::optional<LtmId> acting_for(LtmId shard) const;
  // Text rendering of `holder`'s copy of `shard`'s state, if it has one.
  std::optional<std::string> shard_digest(LtmId holder, LtmId shard) const;

  const std::vector<CommitRecord>& history() const { return history_; }
  const std::vector<DecisionEvent>& decisions() const { return decisions_; }
  sim::Trace& trace() { return trace_; }
  const sim::Trace& trace() const { return trace_; }
  sim::EventLoop& loop() { return loop_; }
  const TxnConfig& config() const { return config_; }
  Store& store() { return *store_; }

 private:
  struct ReadEntry {
    Timestamp snapshot;  // head version ts at read time, unset when none
    std::optional<Cell> seen;
  };
  struct CoordRecord {
    TxnId id;
    TxnState state = TxnState::kActive;
    std::map<std::string, ReadEntry> reads;
    std::map<std::string, Bytes> writes;
    std::set<LtmId> participants;
    std::set<LtmId> yes;
    std::set<LtmId> acked;
    Tick prepare_started = 0;
    uint128 max_reported = 0;
    Timestamp commit_ts;
    bool complete = false;
  };
  struct PartRecord {
    LtmId coordinator = 0;
    TxnState state = TxnState::kPrepared;
    std::vector<std::string> items;
    std::vector<std::string> reads;
    std::map<std::string, Bytes> writes;
  };
  struct ShardState {
    std::uint64_t next_seq = 1;
    uint128 last_logical = 0;
    std::map<TxnId, CoordRecord> coord;
    std::map<TxnId, PartRecord> part;
    std::map<std::string, TxnId> locks;
    std::map<std::string, uint128> read_ts;
  };
  struct Ltm {
    bool alive = true;
    std::map<LtmId, ShardState> copies;
  };
  struct PrepareMsg {
    TxnId id;
    std::map<std::string, Timestamp> reads;
    std::map<std::string, Bytes> writes;
  };

  std::string label(LtmId id) const { return "ltm" + std::to_string(id); }
  bool member_of(LtmId node, LtmId shard) const;
  ShardState* copy_on(LtmId node, LtmId shard);
  const ShardState* copy_on(LtmId node, LtmId shard) const;
  void replicate(LtmId from, LtmId shard);
  CoordRecord& client_record(const TxnId& txn, LtmId& node);
  const CoordRecord* find_record(const TxnId& txn) const;

  // Sends from whichever node acts for `from_shard` to whichever acts for
  // `to_shard`; the handler gets the receiving node.
  void send(LtmId from_shard, LtmId to_shard, std::function<void(LtmId)> handler);
  void on_prepare(LtmId node, LtmId shard, const PrepareMsg& msg);
  void on_vote(LtmId node, const TxnId& txn, LtmId from, bool yes, uint128 reported);
  void on_decision(LtmId node, LtmId shard, const TxnId& txn, bool commit, Timestamp ts);
  void on_ack(LtmId node, const TxnId& txn, LtmId from);
  void decide(LtmId node, CoordRecord& rec, bool commit, std::string_view why);
  void send_decision(LtmId shard, const CoordRecord& rec, LtmId participant);
  void pump();
  bool all_complete() const;

  Store* store_;
  TxnConfig config_;
  sim::EventLoop loop_;
  sim::Network net_;
  sim::Trace trace_;
  std::vector<Ltm> ltms_;
  std::vector<std::uint64_t> issued_;  // stable per-LTM id counter
  std::vector<CommitRecord> history_;
  std::map<TxnId, std::size_t> history_index_;
  std::vector<DecisionEvent> decisions_;
};

// Runs a line-oriented script against `cluster`, appending to its trace.
//   TABLE <name> <family>[:super]...
//   [@name] BEGIN [ltm] | READ <path> | WRITE <path> <value> | COMMIT [nowait] | AWAIT
//   CREAD <path> | CRASH <ltm> | RECOVER <ltm> | TICK <n> | PARTITION <groups> | HEAL
// Without @name, txn verbs address the most recent BEGIN.
void run_script(TxnCluster& cluster, std::string_view script);

}  // namespace robostore::txn
