#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace robostore::sim {

using Tick = std::uint64_t;
using NodeId = std::uint32_t;

// SplitMix64. Bounded draws use plain modulo so the stream is identical on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return p > 0.0 && unit() < p; }

 private:
  std::uint64_t state_;
};

// FNV-1a; the one key hash used for sharding everywhere.
std::uint64_t hash_key(std::string_view key);

// Discrete-event loop over virtual ticks. Events at the same tick run in
// scheduling order.
class EventLoop {
 public:
  Tick now() const { return now_; }

  void schedule_at(Tick at, std::function<void()> fn);
  void schedule_after(Tick delay, std::function<void()> fn) { schedule_at(now_ + delay, std::move(fn)); }

  // Runs every event due at or before `until`, then parks the clock there.
  void run_until(Tick until);
  // Runs events until `done()` holds or the next event lies past `deadline`.
  // Returns done().
  bool run_until_true(const std::function<bool()>& done, Tick deadline);
  bool run_one();

  std::size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    Tick at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

// "T=<tick> <node> <event>" lines.
class Trace {
 public:
  void add(Tick tick, std::string_view node, std::string_view event);
  const std::vector<std::string>& lines() const { return lines_; }
  std::string text() const;
  void clear() { lines_.clear(); }

 private:
  std::vector<std::string> lines_;
};

struct NetConfig {
  double drop_probability = 0.0;
  Tick min_delay = 1;
  Tick max_delay = 3;
};

// Simulated message fabric: seeded delays and drops, partitions, crashed
// nodes. Partition and liveness are checked at send and again at delivery.
class Network {
 public:
  Network(EventLoop& loop, std::size_t node_count, NetConfig config, std::uint64_t seed);

  // Reliable sends are never randomly dropped but still respect partitions
  // and liveness. A node sending to itself is delivered at the current tick.
  void send(NodeId from, NodeId to, std::function<void()> on_deliver, bool reliable = false);

  // Nodes in different groups cannot talk. Unlisted nodes share one extra
  // group.
  void partition(const std::vector<std::vector<NodeId>>& groups);
  void heal();
  bool partitioned() const { return partitioned_; }
  bool reachable(NodeId a, NodeId b) const;
  std::size_t group_of(NodeId n) const { return group_[n]; }

  void set_alive(NodeId n, bool alive) { alive_[n] = alive; }
  bool alive(NodeId n) const { return alive_[n]; }

  std::size_t node_count() const { return alive_.size(); }
  const NetConfig& config() const { return config_; }
  Rng& rng() { return rng_; }
  EventLoop& loop() { return loop_; }

  // Called after each successful delivery, with a running count.
  void set_delivery_hook(std::function<void(NodeId to, std::uint64_t count)> hook) { hook_ = std::move(hook); }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  EventLoop& loop_;
  NetConfig config_;
  Rng rng_;
  std::vector<bool> alive_;
  std::vector<std::size_t> group_;
  bool partitioned_ = false;
  std::function<void(NodeId, std::uint64_t)> hook_;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

// One parsed line of a scenario script. Blank lines and '#' comments are
// skipped.
struct Statement {
  std::size_t line = 0;
  std::string verb;  // upper-cased
  std::vector<std::string> args;
};

std::vector<Statement> parse_script(std::string_view text);

// "0,1|2,3" -> {{0,1},{2,3}}
std::vector<std::vector<NodeId>> parse_groups(std::string_view spec);

}  // namespace robostore::sim
