#include "robostore/mapreduce.hpp"

#include <algorithm>

#include "robostore/error.hpp"

namespace robostore::mapreduce {

namespace {

constexpr sim::NodeId kMaster = 0;

uint128 parse_number(const Bytes& text) {
  if (text.empty()) throw Error(ErrorCode::kParseError, "empty number");
  uint128 v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw Error(ErrorCode::kParseError, "not a number: " + text);
    const uint128 next = v * 10 + static_cast<unsigned>(c - '0');
    if (next / 10 != v) throw Error(ErrorCode::kParseError, "number overflows: " + text);
    v = next;
  }
  return v;
}

std::string print_number(uint128 v) { return Timestamp(v).to_string(); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<KeyValue> word_count(const ScanRow& row, const Bytes&) {
  std::vector<KeyValue> out;
  for (const auto& sc : row.cells) {
    if (sc.cell.tombstone) continue;
    const Bytes& v = sc.cell.value;
    std::size_t i = 0;
    while (i < v.size()) {
      while (i < v.size() && is_space(v[i])) ++i;
      std::size_t j = i;
      while (j < v.size() && !is_space(v[j])) ++j;
      if (j > i) out.emplace_back(v.substr(i, j - i), "1");
      i = j;
    }
  }
  return out;
}

std::vector<KeyValue> max_ts(const ScanRow& row, const Bytes&) {
  std::vector<KeyValue> out;
  for (const auto& sc : row.cells) {
    if (sc.cell.tombstone) continue;
    std::string key = escape_component(sc.path.family);
    if (sc.path.super_key) key += "/" + escape_component(*sc.path.super_key);
    key += "/" + escape_component(sc.path.column);
    out.emplace_back(std::move(key), sc.cell.ts.to_string());
  }
  return out;
}

// Overlapping occurrences of the template across the row's cell values.
std::vector<KeyValue> template_match(const ScanRow& row, const Bytes& tmpl) {
  if (tmpl.empty()) throw Error(ErrorCode::kInvalidConfig, "template-match needs a non-empty template");
  std::uint64_t count = 0;
  for (const auto& sc : row.cells) {
    if (sc.cell.tombstone) continue;
    for (auto pos = sc.cell.value.find(tmpl); pos != Bytes::npos; pos = sc.cell.value.find(tmpl, pos + 1)) ++count;
  }
  if (count == 0) return {};
  return {{row.row_key, std::to_string(count)}};
}

Bytes sum(const std::string&, const std::vector<Bytes>& values) {
  uint128 total = 0;
  for (const auto& v : values) total += parse_number(v);
  return print_number(total);
}

Bytes max(const std::string&, const std::vector<Bytes>& values) {
  uint128 best = 0;
  for (const auto& v : values) best = std::max(best, parse_number(v));
  return print_number(best);
}

}  // namespace

FunctionRegistry FunctionRegistry::with_builtins() {
  FunctionRegistry r;
  r.add_map("word-count", word_count);
  r.add_map("max-ts", max_ts);
  r.add_map("template-match", template_match);
  r.add_reduce("sum", sum);
  r.add_reduce("max", max);
  return r;
}

const MapFn& FunctionRegistry::map(const std::string& name) const {
  auto it = maps_.find(name);
  if (it == maps_.end()) throw Error(ErrorCode::kUnknownFunction, "map function " + name);
  return it->second;
}

const ReduceFn& FunctionRegistry::reduce(const std::string& name) const {
  auto it = reduces_.find(name);
  if (it == reduces_.end()) throw Error(ErrorCode::kUnknownFunction, "reduce function " + name);
  return it->second;
}

std::vector<std::string> FunctionRegistry::map_names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : maps_) out.push_back(n);
  return out;
}

std::vector<std::string> FunctionRegistry::reduce_names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : reduces_) out.push_back(n);
  return out;
}

void EngineConfig::validate() const {
  if (workers < 1 || workers > 255) throw Error(ErrorCode::kInvalidConfig, "workers must be in [1, 255]");
  if (min_task_ticks < 1 || max_task_ticks < min_task_ticks) {
    throw Error(ErrorCode::kInvalidConfig, "need 1 <= min_task_ticks <= max_task_ticks");
  }
  if (deadline == 0) throw Error(ErrorCode::kInvalidConfig, "deadline must be positive");
}

Engine::Engine(const Store& store, FunctionRegistry registry, EngineConfig config)
    : store_(&store),
      registry_(std::move(registry)),
      config_((config.validate(), config)),
      net_(loop_, config.workers + 1, {0.0, 1, 2}, config.seed),
      rng_(config.seed ^ 0x6d6170726564ULL),
      busy_(config.workers + 1, false) {}

Engine::Job& Engine::job(JobId id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, std::to_string(id));
  return it->second;
}

const Engine::Job& Engine::job(JobId id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::kUnknownJob, std::to_string(id));
  return it->second;
}

JobId Engine::submit(const JobSpec& spec) {
  // Map functions are pure, so an empty-row probe surfaces bad parameters now
  // rather than inside a worker.
  registry_.map(spec.map_fn)(ScanRow{}, spec.map_param);
  registry_.reduce(spec.reduce_fn);
  if (spec.num_splits == 0) throw Error(ErrorCode::kZeroSplits, "a job needs at least one split");
  if (!store_->has_table(spec.table)) throw Error(ErrorCode::kUnknownTable, spec.table);

  const std::vector<ScanRow> rows = store_->scan(spec.table, spec.filter);
  Job j;
  j.spec = spec;
  j.splits.resize(spec.num_splits);
  // Contiguous chunks; the first rows % M splits take one extra row.
  const std::size_t base = rows.size() / spec.num_splits;
  const std::size_t extra = rows.size() % spec.num_splits;
  std::size_t at = 0;
  for (std::size_t i = 0; i < spec.num_splits; ++i) {
    const std::size_t take = base + (i < extra ? 1 : 0);
    j.splits[i].rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(at),
                            rows.begin() + static_cast<std::ptrdiff_t>(at + take));
    at += take;
  }
  const JobId id = next_job_++;
  trace_.add(loop_.now(), "master",
             "SUBMIT job=" + std::to_string(id) + " rows=" + std::to_string(rows.size()) +
                 " splits=" + std::to_string(spec.num_splits) + " fn=" + spec.map_fn + "," + spec.reduce_fn);
  jobs_.emplace(id, std::move(j));
  maybe_reduce(id);
  schedule_round();
  return id;
}

void Engine::schedule_round() {
  if (round_scheduled_) return;
  round_scheduled_ = true;
  loop_.schedule_after(0, [this] {
    round_scheduled_ = false;
    run_round();
  });
}

void Engine::run_round() {
  bool starved = false;
  for (auto& [id, j] : jobs_) {
    if (j.phase != Phase::kMapping) continue;
    for (std::size_t i = 0; i < j.splits.size() && j.phase == Phase::kMapping; ++i) {
      if (j.splits[i].status != SplitStatus::kPending) continue;
      std::vector<sim::NodeId> idle;
      bool any_alive = false;
      for (sim::NodeId w = 1; w <= config_.workers; ++w) {
        if (!net_.alive(w)) continue;
        any_alive = true;
        if (!busy_[w]) idle.push_back(w);
      }
      if (!any_alive) {
        // Nobody to run it: the round counts as a failed attempt.
        ++j.splits[i].attempts;
        requeue(id, i, "no-workers");
        starved = true;
        continue;
      }
      if (idle.empty()) break;
      dispatch(id, i, idle[rng_.below(idle.size())]);
    }
  }
  if (starved) {
    loop_.schedule_after(1, [this] { schedule_round(); });
  }
}

void Engine::dispatch(JobId id, std::size_t index, sim::NodeId worker) {
  Split& s = jobs_.at(id).splits[index];
  s.status = SplitStatus::kRunning;
  s.worker = worker;
  ++s.attempts;
  s.token = next_token_++;
  busy_[worker] = true;
  trace_.add(loop_.now(), "master",
             "DISPATCH job=" + std::to_string(id) + " split=" + std::to_string(index) + " -> " + wlabel(worker) +
                 " attempt=" + std::to_string(s.attempts));
  const std::uint64_t token = s.token;
  const sim::Tick work = rng_.between(config_.min_task_ticks, config_.max_task_ticks);
  net_.send(kMaster, worker, [this, id, index, worker, token, work] {
    const Job& j = jobs_.at(id);
    const Split& sp = j.splits[index];
    if (sp.token != token) return;
    const MapFn& fn = registry_.map(j.spec.map_fn);
    std::vector<KeyValue> out;
    for (const auto& row : sp.rows) {
      auto kv = fn(row, j.spec.map_param);
      out.insert(out.end(), std::make_move_iterator(kv.begin()), std::make_move_iterator(kv.end()));
    }
    trace_.add(loop_.now(), wlabel(worker),
               "MAP job=" + std::to_string(id) + " split=" + std::to_string(index) + " rows=" +
                   std::to_string(sp.rows.size()) + " pairs=" + std::to_string(out.size()));
    loop_.schedule_after(work, [this, id, index, worker, token, out = std::move(out)]() mutable {
      const Split& now_split = jobs_.at(id).splits[index];
      // Died or got reassigned while working: the result is lost.
      if (!net_.alive(worker) || now_split.token != token) return;
      net_.send(worker, kMaster, [this, id, index, token, out = std::move(out)]() mutable {
        on_done(id, index, token, std::move(out));
      }, true);
    });
  }, true);
}

void Engine::on_done(JobId id, std::size_t index, std::uint64_t token, std::vector<KeyValue> output) {
  Job& j = jobs_.at(id);
  Split& s = j.splits[index];
  if (j.phase != Phase::kMapping || s.status != SplitStatus::kRunning || s.token != token) {
    trace_.add(loop_.now(), "master", "STALE job=" + std::to_string(id) + " split=" + std::to_string(index));
    return;
  }
  busy_[*s.worker] = false;
  s.status = SplitStatus::kDone;
  s.output = std::move(output);
  trace_.add(loop_.now(), "master",
             "DONE job=" + std::to_string(id) + " split=" + std::to_string(index) + " from " + wlabel(*s.worker));
  maybe_reduce(id);
  schedule_round();
}

void Engine::requeue(JobId id, std::size_t index, std::string_view why) {
  Job& j = jobs_.at(id);
  Split& s = j.splits[index];
  s.status = SplitStatus::kPending;
  s.worker.reset();
  s.token = 0;
  const std::string tag = "job=" + std::to_string(id) + " split=" + std::to_string(index);
  if (s.attempts > config_.max_retries) {
    s.status = SplitStatus::kFailed;
    j.phase = Phase::kFailed;
    trace_.add(loop_.now(), "master", "FAILED " + tag + " attempts=" + std::to_string(s.attempts));
    return;
  }
  trace_.add(loop_.now(), "master", "REQUEUE " + tag + " " + std::string(why));
}

void Engine::maybe_reduce(JobId id) {
  Job& j = jobs_.at(id);
  if (j.phase != Phase::kMapping) return;
  for (const auto& s : j.splits) {
    if (s.status != SplitStatus::kDone) return;
  }
  j.phase = Phase::kReducing;
  std::map<std::string, std::vector<Bytes>> groups;
  for (const auto& s : j.splits) {
    for (const auto& [k, v] : s.output) groups[k].push_back(v);
  }
  const ReduceFn& fn = registry_.reduce(j.spec.reduce_fn);
  for (const auto& [k, vs] : groups) j.result[k] = fn(k, vs);
  j.phase = Phase::kComplete;
  trace_.add(loop_.now(), "master",
             "COMPLETE job=" + std::to_string(id) + " keys=" + std::to_string(j.result.size()));
}

Result Engine::await(JobId id) {
  const sim::Tick deadline = loop_.now() + config_.deadline;
  loop_.run_until_true(
      [&] {
        const Phase p = job(id).phase;
        return p == Phase::kComplete || p == Phase::kFailed;
      },
      deadline);
  const Job& j = job(id);
  if (j.phase == Phase::kFailed) throw Error(ErrorCode::kJobFailed, "job " + std::to_string(id) + " ran out of retries");
  if (j.phase != Phase::kComplete) throw Error(ErrorCode::kJobFailed, "job " + std::to_string(id) + " hit the deadline");
  return j.result;
}

Phase Engine::phase(JobId id) const { return job(id).phase; }

std::vector<SplitView> Engine::splits(JobId id) const {
  std::vector<SplitView> out;
  for (const auto& s : job(id).splits) out.push_back({s.status, s.worker, s.attempts, s.rows.size()});
  return out;
}

void Engine::fail_worker(sim::NodeId worker) {
  if (worker == kMaster || worker > config_.workers) {
    throw Error(ErrorCode::kOutOfRange, "no worker " + std::to_string(worker));
  }
  if (!net_.alive(worker)) return;
  net_.set_alive(worker, false);
  busy_[worker] = false;
  trace_.add(loop_.now(), wlabel(worker), "FAIL");
  for (auto& [id, j] : jobs_) {
    if (j.phase != Phase::kMapping) continue;
    for (std::size_t i = 0; i < j.splits.size(); ++i) {
      if (j.splits[i].status == SplitStatus::kRunning && j.splits[i].worker == worker) requeue(id, i, "worker-failed");
    }
  }
  schedule_round();
}

void Engine::recover_worker(sim::NodeId worker) {
  if (worker == kMaster || worker > config_.workers) {
    throw Error(ErrorCode::kOutOfRange, "no worker " + std::to_string(worker));
  }
  if (net_.alive(worker)) return;
  net_.set_alive(worker, true);
  trace_.add(loop_.now(), wlabel(worker), "RECOVER");
  schedule_round();
}

bool Engine::worker_alive(sim::NodeId worker) const {
  if (worker == kMaster || worker > config_.workers) {
    throw Error(ErrorCode::kOutOfRange, "no worker " + std::to_string(worker));
  }
  return net_.alive(worker);
}

}  // namespace robostore::mapreduce
