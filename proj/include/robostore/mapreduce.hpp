#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "robostore/sim/core.hpp"
#include "robostore/storage.hpp"

namespace robostore::mapreduce {

using KeyValue = std::pair<std::string, Bytes>;
using MapFn = std::function<std::vector<KeyValue>(const ScanRow& row, const Bytes& param)>;
// Must not depend on the order of `values`.
using ReduceFn = std::function<Bytes(const std::string& key, const std::vector<Bytes>& values)>;

class FunctionRegistry {
 public:
  // word-count, max-ts and template-match maps; sum and max reducers.
  static FunctionRegistry with_builtins();

  void add_map(const std::string& name, MapFn fn) { maps_[name] = std::move(fn); }
  void add_reduce(const std::string& name, ReduceFn fn) { reduces_[name] = std::move(fn); }
  const MapFn& map(const std::string& name) const;        // throws UnknownFunction
  const ReduceFn& reduce(const std::string& name) const;  // throws UnknownFunction
  bool has_map(const std::string& name) const { return maps_.contains(name); }
  bool has_reduce(const std::string& name) const { return reduces_.contains(name); }
  std::vector<std::string> map_names() const;
  std::vector<std::string> reduce_names() const;

 private:
  std::map<std::string, MapFn> maps_;
  std::map<std::string, ReduceFn> reduces_;
};

struct JobSpec {
  std::string table;
  ScanFilter filter;
  std::string map_fn;
  Bytes map_param;
  std::string reduce_fn;
  std::size_t num_splits = 1;
};

using JobId = std::uint64_t;
using Result = std::map<std::string, Bytes>;

enum class Phase { kMapping, kReducing, kComplete, kFailed };
enum class SplitStatus { kPending, kRunning, kDone, kFailed };

struct SplitView {
  SplitStatus status = SplitStatus::kPending;
  std::optional<sim::NodeId> worker;
  std::size_t attempts = 0;
  std::size_t rows = 0;
};

struct EngineConfig {
  std::size_t workers = 3;
  std::uint64_t seed = 1;
  sim::Tick min_task_ticks = 1;
  sim::Tick max_task_ticks = 4;
  std::size_t max_retries = 3;  // re-executions allowed per split
  sim::Tick deadline = 100000;  // await() gives up after this many ticks

  void validate() const;
};

// One master (node 0) and `workers` worker nodes on a seeded event loop.
// Input rows are read once at submit and cut into contiguous splits; each
// split's intermediate pairs reach the reduce step exactly once.
class Engine {
 public:
  Engine(const Store& store, FunctionRegistry registry, EngineConfig config);
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  JobId submit(const JobSpec& spec);
  Result await(JobId job);  // throws JobFailed
  Phase phase(JobId job) const;
  std::vector<SplitView> splits(JobId job) const;

  // Worker ids run 1..workers.
  void fail_worker(sim::NodeId worker);
  void recover_worker(sim::NodeId worker);
  bool worker_alive(sim::NodeId worker) const;

  sim::EventLoop& loop() { return loop_; }
  sim::Trace& trace() { return trace_; }
  const FunctionRegistry& registry() const { return registry_; }

 private:
  struct Split {
    std::vector<ScanRow> rows;
    SplitStatus status = SplitStatus::kPending;
    std::optional<sim::NodeId> worker;
    std::size_t attempts = 0;
    std::uint64_t token = 0;  // identifies the live attempt
    std::vector<KeyValue> output;
  };
  struct Job {
    JobSpec spec;
    Phase phase = Phase::kMapping;
    std::vector<Split> splits;
    Result result;
  };

  Job& job(JobId id);
  const Job& job(JobId id) const;
  void schedule_round();
  void run_round();
  void dispatch(JobId id, std::size_t index, sim::NodeId worker);
  void on_done(JobId id, std::size_t index, std::uint64_t token, std::vector<KeyValue> output);
  void requeue(JobId id, std::size_t index, std::string_view why);
  void maybe_reduce(JobId id);
  std::string wlabel(sim::NodeId w) const { return "w" + std::to_string(w); }

  const Store* store_;
  FunctionRegistry registry_;
  EngineConfig config_;
  sim::EventLoop loop_;
  sim::Network net_;
  sim::Rng rng_;
  sim::Trace trace_;
  std::map<JobId, Job> jobs_;
  std::vector<bool> busy_;
  JobId next_job_ = 1;
  std::uint64_t next_token_ = 1;
  bool round_scheduled_ = false;
};

}  // namespace robostore::mapreduce
