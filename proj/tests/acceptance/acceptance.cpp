// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/chain_oracle.hpp"
#include "../support/graph_oracle.hpp"
#include "../support/locator_oracle.hpp"
#include "../support/mapreduce_oracle.hpp"
#include "../support/storage_oracle.hpp"
#include "../support/txn_workload.hpp"
#include "cli.hpp"
#include "robostore/chain.hpp"
#include "robostore/error.hpp"
#include "robostore/graph.hpp"
#include "robostore/locator.hpp"
#include "robostore/mapreduce.hpp"
#include "robostore/sim/cluster.hpp"
#include "robostore/timestamp_index.hpp"

namespace {

using namespace robostore;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

// ---- 1: multi-version storage against a write-log replay ----

Outcome multi_version() {
  const auto start = Clock::now();
  Store store;
  store.create_table("hand", {{"thumb", false}, {"palm", false}});
  std::vector<ColumnPath> paths;
  for (int r = 0; r < 5; ++r) {
    for (const char* fam : {"thumb", "palm"}) {
      for (int c = 0; c < 5; ++c) {
        paths.push_back({"hand", "r" + std::to_string(r), fam, std::nullopt, "c" + std::to_string(c)});
      }
    }
  }
  testing::LogOracle oracle;
  sim::Rng rng(2024);
  std::size_t mismatches = 0, gets = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto& p = paths[rng.below(paths.size())];
    const auto op = rng.below(10);
    if (op < 2) {
      const Timestamp ts{1 + rng.below(500)};
      oracle.record(p, store.erase(p, ts), true, "");
    } else if (op < 5) {
      ++gets;
      const Timestamp q{rng.below(520)};
      const auto got = store.get_at(p, q);
      const auto want = oracle.at(p, q);
      if (got.has_value() != want.has_value() || (got && got->value != *want)) ++mismatches;
    } else {
      const Bytes v = "v" + std::to_string(i) + std::string(1, static_cast<char>(rng.below(256)));
      const Timestamp ts{1 + rng.below(500)};
      oracle.record(p, store.put(p, v, ts), false, v);
    }
  }
  for (const auto& p : paths) {
    const auto got = store.get_latest(p);
    const auto want = oracle.latest(p);
    if (got.has_value() != want.has_value() || (got && got->value != *want)) ++mismatches;
    const auto slots = oracle.slots(p);
    const auto versions = store.versions(p);
    if (versions.size() != slots.size()) {
      ++mismatches;
      continue;
    }
    auto it = slots.rbegin();
    for (const Cell& c : versions) {
      if (c.ts != it->first || c.tombstone != it->second.tombstone || (!c.tombstone && c.value != it->second.value)) {
        ++mismatches;
      }
      ++it;
    }
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0,
          "10000 ops over " + std::to_string(paths.size()) + " columns, " + std::to_string(gets) + " get_at, " +
              std::to_string(mismatches) + " mismatches, " + fmt_seconds(secs)};
}

// ---- 2: timestamp index latest retrieval ----

Outcome index_latest() {
  Store store;
  store.create_table("webtable", {{"contents", false}});
  std::size_t failures = 0;
  {
    TimestampIndexRegistry index(store);
    const IndexOwner owner{"webtable", "com.cnn.www", "contents"};
    index.record(owner, "T1", Timestamp{100}, Bytes("com.cnn.www"));
    index.record(owner, "T2", Timestamp{200}, Bytes("com.cnn.www"));
    const auto latest = index.latest(owner);
    if (!latest || latest->label != "T2" || latest->ts != Timestamp{200}) ++failures;
  }
  const std::size_t fixture_failures = failures;

  sim::Rng rng(77);
  const IndexOwner owner{"webtable", "row", "contents"};
  for (int round = 0; round < 1000; ++round) {
    TimestampIndexRegistry index(store);
    std::map<std::string, std::pair<Timestamp, IndexTarget>> model;
    for (int i = 0, n = static_cast<int>(rng.between(1, 30)); i < n; ++i) {
      const std::string label = "T" + std::to_string(rng.between(1, 12));
      const Timestamp ts{1 + rng.below(60)};
      IndexTarget target;
      if (rng.chance(0.5)) {
        target = Bytes("value" + std::to_string(i));
      } else {
        target = ColumnPath{"webtable", "row", "contents", std::nullopt, "c" + std::to_string(rng.below(4))};
      }
      index.record(owner, label, ts, target);
      model[label] = {ts, target};
    }
    // argmax over (ts, label)
    auto best = model.begin();
    for (auto it = model.begin(); it != model.end(); ++it) {
      if (std::tie(it->second.first, it->first) > std::tie(best->second.first, best->first)) best = it;
    }
    const auto latest = index.latest(owner);
    if (!latest || latest->label != best->first || latest->ts != best->second.first ||
        latest->target != best->second.second) {
      ++failures;
    }
    // Window filter.
    const Timestamp lo{rng.below(60)}, hi{lo.value() + rng.below(30)};
    std::vector<std::pair<Timestamp, std::string>> want;
    for (const auto& [label, e] : model) {
      if (e.first >= lo && e.first <= hi) want.emplace_back(e.first, label);
    }
    std::sort(want.begin(), want.end());
    const auto got = index.range(owner, lo, hi);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].ts == want[i].first && got[i].label == want[i].second;
    }
    if (!same) ++failures;
  }
  return {failures == 0, std::string("fixture latest=") + (fixture_failures == 0 ? "T2" : "wrong") +
                             ", 1000 random workloads, " + std::to_string(failures) + " failures"};
}

// ---- 3: tablet location ----

Outcome tablet_location() {
  using namespace location;
  TabletHierarchy h("root");
  std::vector<std::pair<Bytes, ServerId>> splits{{"", "s0"}};
  for (int i = 1; i < 10; ++i) splits.push_back({Bytes(1, static_cast<char>('a' + 2 * i)), "s" + std::to_string(i % 4)});
  h.add_table("robots", "meta0", splits);
  h.add_table("tasks", "meta1", {{"", "s1"}, {"m", "s2"}});

  std::size_t failures = 0;
  LocatorClient client(h);
  const auto cold = client.locate("robots", "k");
  const auto warm = client.locate("robots", "k");
  const bool cold_ok = cold.hops.size() == 3 && cold.hops[0].level == Level::kRoot &&
                       cold.hops[1].level == Level::kMeta && cold.hops[2].level == Level::kUser;
  const bool warm_ok = warm.hops.empty() && warm.cache_hit;
  if (!cold_ok || !warm_ok) ++failures;

  // A client that has every tablet cached, then never hears about moves.
  LocatorClient stale(h);
  for (const auto& table : h.tables()) {
    for (const auto& t : h.user_tablets(table)) stale.locate(table, t.range.start_key);
  }
  sim::Rng rng(5);
  std::size_t stale_hits = 0;
  for (int move = 0; move < 200; ++move) {
    const std::string table = rng.chance(0.7) ? "robots" : "tasks";
    const auto tablets = h.user_tablets(table);
    const auto& pick = tablets[rng.below(tablets.size())];
    h.move_tablet(pick.range, "s" + std::to_string(rng.below(6)));
    // One key inside the moved tablet and one anywhere.
    Bytes inside = pick.range.start_key + static_cast<char>('a' + rng.below(26));
    if (!pick.range.contains(inside)) inside = pick.range.start_key;
    for (const Bytes& key : {inside, Bytes(1, static_cast<char>('a' + rng.below(26)))}) {
      const auto r = stale.locate(table, key);
      stale_hits += r.stale_hit ? 1 : 0;
      const auto want = testing::authoritative_server(h, table, key);
      if (!want || r.location.node != *want || !r.location.range.contains(key)) ++failures;
    }
  }
  return {failures == 0, std::string("cold=") + std::to_string(cold.hops.size()) + " hops, warm=" +
                             std::to_string(warm.hops.size()) + " hops, 200 moves, " + std::to_string(stale_hits) +
                             " stale entries repaired, " + std::to_string(failures) + " failures"};
}

// ---- 4 and 5: transactions under faults ----

struct TxnRuns {
  std::vector<testing::WorkloadReport> reports;
  double seconds = 0;
};

const TxnRuns& txn_runs() {
  static const TxnRuns runs = [] {
    TxnRuns r;
    const auto start = Clock::now();
    for (std::uint64_t seed = 1; seed <= 600; ++seed) r.reports.push_back(testing::run_txn_workload(seed, true));
    r.seconds = seconds_since(start);
    return r;
  }();
  return runs;
}

std::string event_kind(const std::string& line) {
  // "T=<tick> <node> <EVENT> ..."
  std::istringstream in(line);
  std::string tick, node, kind;
  in >> tick >> node >> kind;
  return kind;
}

Outcome txn_acid() {
  const auto& runs = txn_runs();
  std::size_t atomic = 0, serial = 0, durable = 0, quiesced = 0, committed = 0, aborted = 0;
  std::size_t with_crash = 0, with_partition = 0;
  std::set<std::string> crashed_after;  // protocol event right before a crash
  std::string first_failure;
  for (std::size_t i = 0; i < runs.reports.size(); ++i) {
    const auto& r = runs.reports[i];
    atomic += r.verdict.atomic;
    serial += r.verdict.serializable;
    durable += r.verdict.durable;
    quiesced += r.quiesced;
    committed += r.committed;
    aborted += r.aborted;
    if (!r.verdict.ok() && first_failure.empty()) first_failure = "seed " + std::to_string(i + 1) + ": " + r.verdict.detail;
    std::istringstream in(r.trace);
    std::string line, prev;
    bool crash = false, part = false;
    while (std::getline(in, line)) {
      const auto kind = event_kind(line);
      if (kind == "CRASH") {
        crash = true;
        if (!prev.empty()) crashed_after.insert(prev);
      } else if (kind == "PARTITION") {
        part = true;
      } else if (kind != "RECOVER" && kind != "HEAL") {
        prev = kind;
      }
    }
    with_crash += crash;
    with_partition += part;
  }
  const std::size_t n = runs.reports.size();
  std::string steps;
  for (const auto& s : crashed_after) steps += (steps.empty() ? "" : ",") + s;
  const bool every_step = [&] {
    // A participant logs PREPARE and VOTE in one delivery, so VOTE stands for both.
    for (const char* s : {"BEGIN", "WRITE", "COMMIT-REQUEST", "VOTE", "DECIDE", "APPLY", "DONE"}) {
      if (!crashed_after.contains(s)) return false;
    }
    return true;
  }();
  const bool pass = n >= 500 && atomic == n && serial == n && durable == n && quiesced == n && every_step &&
                    runs.seconds < 60.0;
  std::string detail = std::to_string(n) + " workloads (" + std::to_string(with_crash) + " with crashes, " +
                       std::to_string(with_partition) + " with partitions), " + std::to_string(committed) +
                       " committed, " + std::to_string(aborted) + " aborted; atomic " + std::to_string(atomic) + "/" +
                       std::to_string(n) + ", serial replay " + std::to_string(serial) + "/" + std::to_string(n) +
                       ", no reversed commit " + std::to_string(durable) + "/" + std::to_string(n) +
                       "; crashes after " + steps + "; " + fmt_seconds(runs.seconds);
  if (!first_failure.empty()) detail += "; " + first_failure;
  return {pass, detail};
}

Outcome consistent_reads() {
  const auto& runs = txn_runs();
  std::size_t reads = 0, violations = 0;
  std::string first;
  for (const auto& r : runs.reports) {
    reads += r.consistent_reads;
    violations += r.read_violations.size();
    if (first.empty() && !r.read_violations.empty()) first = r.read_violations.front();
  }
  std::string detail = std::to_string(reads) + " consistent reads over " + std::to_string(runs.reports.size()) +
                       " traces, " + std::to_string(violations) + " outside the committed prefix";
  if (!first.empty()) detail += "; first: " + first;
  return {violations == 0 && reads > 0, detail};
}

// ---- 6: MapReduce against a sequential fold ----

Outcome mapreduce_equivalence() {
  const auto reg = mapreduce::FunctionRegistry::with_builtins();
  sim::Rng rng(606);
  std::size_t jobs = 0, equal = 0, with_failures = 0;
  std::string first;
  for (int dataset = 0; dataset < 8; ++dataset) {
    Store store;
    store.create_table("scans", {{"img", false}});
    const std::size_t rows = dataset == 0 ? 1000 : rng.between(0, 1000);
    const char* vocab[] = {"ab", "ba", "aab", "b", "abba", "arm", "leg"};
    for (std::size_t r = 0; r < rows; ++r) {
      for (int c = 0, cols = static_cast<int>(rng.between(1, 2)); c < cols; ++c) {
        std::string text;
        for (int w = 0, n = static_cast<int>(rng.between(1, 5)); w < n; ++w) text += std::string(vocab[rng.below(7)]) + " ";
        store.put({"scans", "row" + std::to_string(r), "img", std::nullopt, "c" + std::to_string(c)}, text,
                  Timestamp{1 + rng.below(1'000'000)});
      }
    }
    const mapreduce::JobSpec specs[] = {{"scans", {}, "word-count", "", "sum", 1},
                                        {"scans", {}, "max-ts", "", "max", 1},
                                        {"scans", {}, "template-match", "ab", "sum", 1}};
    for (mapreduce::JobSpec spec : specs) {
      const auto want = testing::sequential_fold(store, reg, spec);
      for (std::size_t m : {1u, 2u, 4u, 8u}) {
        for (int faulty = 0; faulty < 2; ++faulty) {
          spec.num_splits = m;
          // Four workers, so up to three failures always leave one alive.
          mapreduce::Engine e(store, reg, {.workers = 4, .seed = rng.next()});
          if (faulty) {
            ++with_failures;
            for (std::uint64_t f = 0, count = rng.between(1, 3); f < count; ++f) {
              const auto w = static_cast<sim::NodeId>(rng.between(1, 4));
              const auto at = rng.between(0, 10);
              e.loop().schedule_at(at, [&e, w] { e.fail_worker(w); });
              if (rng.chance(0.5)) e.loop().schedule_at(at + rng.between(1, 8), [&e, w] { e.recover_worker(w); });
            }
          }
          ++jobs;
          try {
            if (e.await(e.submit(spec)) == want) {
              ++equal;
            } else if (first.empty()) {
              first = spec.map_fn + " M=" + std::to_string(m) + " differs";
            }
          } catch (const Error& err) {
            if (first.empty()) first = spec.map_fn + " M=" + std::to_string(m) + ": " + err.what();
          }
        }
      }
    }
  }
  std::string detail = std::to_string(equal) + "/" + std::to_string(jobs) + " jobs equal the fold (" +
                       std::to_string(with_failures) + " with 1-3 worker failures among 4 workers), M in {1,2,4,8}";
  if (!first.empty()) detail += "; " + first;
  return {equal == jobs, detail};
}

// ---- 7 and 8: graph planner and property fidelity ----

Outcome shortest_path() {
  using namespace graph;
  sim::Rng rng(707);
  std::size_t failures = 0, queries = 0;
  for (int round = 0; round < 50; ++round) {
    auto rg = testing::random_graph(rng);
    for (int q = 0; q < 5; ++q) {
      const auto s = rg.ids[rng.below(rg.ids.size())];
      const auto t = rg.ids[rng.below(rg.ids.size())];
      const auto want = testing::brute_shortest(rg.g, s, t);
      const auto dij = rg.g.shortest_path(s, t, Algorithm::kDijkstra);
      const auto zero = rg.g.shortest_path(s, t, Algorithm::kAStar, [](NodeId) { return 0.0; });
      const auto euc = rg.g.shortest_path(s, t, Algorithm::kAStar, rg.g.euclidean_heuristic(t));
      ++queries;
      for (const auto* p : {&dij, &zero, &euc}) {
        if (p->has_value() != want.has_value()) {
          ++failures;
        } else if (want && ((*p)->cost != want->cost || (*p)->nodes != want->nodes)) {
          ++failures;
        }
      }
    }
  }
  Graph g;
  auto a = g.create_node(), b = g.create_node(100), c = g.create_node(), d = g.create_node();
  g.create_relationship(a, b, "STEP");
  g.create_relationship(a, c, "STEP");
  g.create_relationship(b, d, "STEP");
  g.create_relationship(c, d, "STEP");
  g.set_position(a, 0, 0);
  g.set_position(b, 1, 0);
  g.set_position(c, 0, 1);
  g.set_position(d, 1, 1);
  double grid_cost = -1;
  for (auto algo : {Algorithm::kDijkstra, Algorithm::kAStar}) {
    const auto p = g.shortest_path(a, d, algo, g.euclidean_heuristic(d));
    if (!p || p->cost != 2.0 || p->nodes != std::vector<NodeId>{a, c, d}) ++failures;
    if (p) grid_cost = p->cost;
  }
  std::ostringstream cost;
  cost << grid_cost;
  return {failures == 0, "50 graphs, " + std::to_string(queries) + " queries x 3 planners, " +
                             std::to_string(failures) + " differ from exhaustive search; grid cost " + cost.str()};
}

Outcome graph_fidelity() {
  using namespace graph;
  Graph g;
  const auto first = g.create_node();
  const auto second = g.create_node();
  const auto rel = g.create_relationship(first, second, "KNOWS");
  g.set_property(Element::node(first), "message", "Arun, ");
  g.set_property(Element::rel(rel), "message", " son");
  g.set_property(Element::node(second), "message", "Raju");
  const Graph back = Graph::parse(g.to_text());
  std::size_t exact = 0;
  for (const Graph* gr : {static_cast<const Graph*>(&g), &back}) {
    exact += gr->get_property(Element::node(first), "message") == std::optional<Bytes>("Arun, ");
    exact += gr->get_property(Element::rel(rel), "message") == std::optional<Bytes>(" son");
    exact += gr->get_property(Element::node(second), "message") == std::optional<Bytes>("Raju");
  }
  return {exact == 6, std::to_string(exact) + "/6 properties byte-exact (direct and after text round trip)"};
}

// ---- 9: chains ----

Outcome chain_execution() {
  using namespace chain;
  sim::Rng rng(909);
  Store store;
  ChainStore chains(store, {"head", "arm", "leg"});
  const char* parts[] = {"head", "arm", "leg"};
  std::vector<InstructionRef> stored;
  std::size_t acyclic = 0, walks = 0, mismatches = 0, cyclic = 0, rejected = 0;
  for (int task = 0; acyclic < 200; ++task) {
    const std::string name = "task" + std::to_string(task);
    const std::size_t n = rng.between(1, 8);
    std::vector<Instruction> list;
    for (std::size_t i = 0; i < n; ++i) {
      Instruction in;
      in.ref = {parts[rng.below(3)], "t" + std::to_string(task) + "i" + std::to_string(i)};
      in.action = "act" + std::to_string(rng.below(4));
      in.target = FuzzyState{static_cast<int>(rng.below(10))};
      list.push_back(in);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.chance(0.4)) {
        list[i].branch_key = "k" + std::to_string(rng.below(3));
        if (i + 1 < n && (stored.empty() || rng.chance(0.6))) {
          list[i].branch_next = list[rng.between(i + 1, n - 1)].ref;
        } else if (!stored.empty()) {
          list[i].branch_next = stored[rng.below(stored.size())];
        } else {
          list[i].branch_key.reset();
        }
      }
      if (rng.chance(0.15)) list[i].terminal = true;
    }
    if (n > 1 && rng.chance(0.2)) {
      // Close a loop through the spine or a branch.
      const std::size_t from = rng.between(1, n - 1);
      const std::size_t to = rng.below(from + 1);
      if (rng.chance(0.5)) {
        list[from].next = list[to].ref;
        list[from].terminal = false;
      } else {
        list[from].branch_key = "loop";
        list[from].branch_next = list[to].ref;
      }
      for (std::size_t i = to; i < from; ++i) {
        list[i].terminal = false;
        list[i].next.reset();
        list[i].branch_key.reset();
        list[i].branch_next.reset();
      }
      ++cyclic;
      try {
        chains.store_chain(name, list);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kCycleDetected && !chains.head(name)) ++rejected;
      }
      continue;
    }
    chains.store_chain(name, list);
    ++acyclic;
    for (const auto& in : list) stored.push_back(in.ref);
    for (int c = 0; c < 4; ++c) {
      std::map<std::string, Bytes> ctx;
      for (int k = 0, m = static_cast<int>(rng.below(3)); k < m; ++k) {
        ctx["key" + std::to_string(k)] = "k" + std::to_string(rng.below(4));
      }
      ++walks;
      const auto want = testing::walk_cells(store, name, ctx);
      const auto got = chains.execute(name, ctx);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i].ref.to_string() == want[i].ref && got[i].action == want[i].action &&
               std::to_string(got[i].target.level) == want[i].state;
      }
      if (!same) ++mismatches;
    }
  }
  return {mismatches == 0 && rejected == cyclic && cyclic > 0,
          std::to_string(acyclic) + " chains, " + std::to_string(walks) + " walks, " + std::to_string(mismatches) +
              " mismatches; " + std::to_string(rejected) + "/" + std::to_string(cyclic) + " cyclic submissions rejected"};
}

// ---- 10: CAP modes ----

std::vector<std::vector<sim::NodeId>> random_split(sim::Rng& rng, std::size_t n) {
  std::vector<sim::NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t cut = rng.between(1, n - 1);
  return {{order.begin(), order.begin() + cut}, {order.begin() + cut, order.end()}};
}

// CP: an operation is expected to succeed iff its node's side holds a
// majority of the key's replicas, and every successful read returns the last
// acknowledged write.
bool cp_scenario(std::uint64_t seed, std::string& why, std::size_t& unavailable) {
  sim::Rng rng(seed);
  sim::SimConfig cfg;
  cfg.node_count = rng.between(3, 6);
  cfg.replication_factor = 3;
  cfg.mode = sim::ConsistencyMode::kCP;
  cfg.seed = seed;
  sim::Cluster cluster(cfg);
  std::map<std::string, Bytes> acked;
  std::vector<std::size_t> side(cfg.node_count, 0);
  bool partitioned = false;
  auto op = [&](int i) {
    const std::string key = "k" + std::to_string(rng.below(5));
    const auto via = static_cast<sim::NodeId>(rng.below(cfg.node_count));
    const auto& replicas = cluster.replicas_of_shard(cluster.shard_of(key));
    std::size_t visible = 0;
    for (auto r : replicas) visible += side[r] == side[via];
    const bool expect_ok = !partitioned || visible >= replicas.size() / 2 + 1;
    const std::string where = "seed " + std::to_string(seed) + " op " + std::to_string(i) + " ";
    if (rng.chance(0.5)) {
      const Bytes v = "v" + std::to_string(i);
      const auto w = cluster.client_write(via, key, v);
      if ((w.status == sim::OpStatus::kOk) != expect_ok) {
        why = where + "write availability wrong";
        return false;
      }
      if (w.status == sim::OpStatus::kOk) acked[key] = v;
      unavailable += w.status != sim::OpStatus::kOk;
    } else {
      const auto r = cluster.client_read(via, key);
      if ((r.status == sim::OpStatus::kOk) != expect_ok) {
        why = where + "read availability wrong";
        return false;
      }
      unavailable += r.status != sim::OpStatus::kOk;
      if (r.status == sim::OpStatus::kOk) {
        auto it = acked.find(key);
        const std::optional<Bytes> want = it == acked.end() ? std::nullopt : std::optional<Bytes>(it->second);
        if (r.value != want) {
          why = where + "stale read of " + key;
          return false;
        }
      }
    }
    return true;
  };
  int i = 0;
  for (; i < 10; ++i) {
    if (!op(i)) return false;
  }
  const auto groups = random_split(rng, cfg.node_count);
  for (auto n : groups[1]) side[n] = 1;
  cluster.partition(groups);
  partitioned = true;
  for (; i < 40; ++i) {
    if (!op(i)) return false;
  }
  cluster.heal();
  std::fill(side.begin(), side.end(), 0);
  partitioned = false;
  for (; i < 55; ++i) {
    if (!op(i)) return false;
  }
  return true;
}

// AP: both sides accept writes; after heal, three anti-entropy rounds leave
// every replica byte-identical with the newest write per key.
bool ap_scenario(std::uint64_t seed, std::string& why, std::size_t& rounds_used) {
  sim::Rng rng(seed);
  sim::SimConfig cfg;
  cfg.node_count = rng.between(3, 6);
  cfg.replication_factor = cfg.node_count;
  cfg.mode = sim::ConsistencyMode::kAP;
  cfg.seed = seed;
  cfg.anti_entropy_period = 0;
  sim::Cluster cluster(cfg);
  const auto groups = random_split(rng, cfg.node_count);
  cluster.partition(groups);
  const std::string where = "seed " + std::to_string(seed) + " ";
  std::map<std::string, std::pair<Timestamp, Bytes>> newest;
  std::set<std::string> tied;
  for (int i = 0; i < 20; ++i) {
    const auto& group = groups[i % 2];
    const auto via = group[rng.below(group.size())];
    const std::string key = "k" + std::to_string(rng.below(4));
    const Bytes v = "side" + std::to_string(i % 2) + "-" + std::to_string(i);
    const auto w = cluster.client_write(via, key, v);
    if (w.status != sim::OpStatus::kOk) {
      why = where + "write refused on side " + std::to_string(i % 2);
      return false;
    }
    auto it = newest.find(key);
    if (it == newest.end() || w.ts > it->second.first) {
      newest[key] = {w.ts, v};
      tied.erase(key);
    } else if (w.ts == it->second.first) {
      tied.insert(key);
    }
    if (rng.chance(0.3)) cluster.tick(rng.between(1, 3));
  }
  cluster.heal();
  std::size_t rounds = 0;
  while (!cluster.replicas_converged() && rounds < 3) {
    cluster.anti_entropy_round();
    ++rounds;
  }
  rounds_used = std::max(rounds_used, rounds);
  for (std::size_t shard = 0; shard < cfg.node_count; ++shard) {
    const auto& replicas = cluster.replicas_of_shard(shard);
    const std::string first = cluster.replica_dump(replicas.front(), shard);
    for (auto r : replicas) {
      if (cluster.replica_dump(r, shard) != first) {
        why = where + "shard " + std::to_string(shard) + " not converged after 3 rounds";
        return false;
      }
    }
  }
  for (const auto& [key, e] : newest) {
    for (sim::NodeId n = 0; n < cfg.node_count; ++n) {
      const auto versions = cluster.replica_versions(n, key);
      if (versions.empty() || versions.front().ts != e.first || (!tied.contains(key) && versions.front().value != e.second)) {
        why = where + key + " did not converge to the newest write";
        return false;
      }
    }
  }
  return true;
}

Outcome cap_modes() {
  std::size_t cp_ok = 0, ap_ok = 0, unavailable = 0, rounds = 0;
  std::string why;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cp_ok += cp_scenario(seed, why, unavailable);
    ap_ok += ap_scenario(seed, why, rounds);
  }
  std::string detail = "CP " + std::to_string(cp_ok) + "/100 scenarios with no violation (" + std::to_string(unavailable) +
                       " minority ops refused); AP " + std::to_string(ap_ok) +
                       "/100 converged byte-exact, at most " + std::to_string(rounds) + " rounds after heal";
  if (!why.empty()) detail += "; " + why;
  return {cp_ok == 100 && ap_ok == 100 && unavailable > 0, detail};
}

// ---- 11: determinism ----

std::string random_scenario(sim::Rng& rng, std::size_t nodes) {
  std::string s;
  for (int i = 0; i < 25; ++i) {
    switch (rng.below(6)) {
      case 0:
        s += "CLIENT " + std::to_string(rng.below(nodes)) + "\n";
        break;
      case 1:
      case 2:
        s += "WRITE k" + std::to_string(rng.below(4)) + " v" + std::to_string(i) + "\n";
        break;
      case 3:
        s += "READ k" + std::to_string(rng.below(4)) + "\n";
        break;
      case 4:
        s += rng.chance(0.5) ? "PARTITION 0|" + std::to_string(nodes - 1) + "\n" : "HEAL\n";
        break;
      default:
        s += "TICK " + std::to_string(rng.between(1, 15)) + "\n";
    }
  }
  return s + "HEAL\nSYNC\n";
}

Outcome determinism() {
  sim::Rng rng(1111);
  std::size_t identical = 0, scenarios = 0;
  std::string first;
  auto check = [&](const std::string& name, const std::function<std::string()>& run) {
    ++scenarios;
    const auto a = run();
    const auto b = run();
    if (a == b && !a.empty()) {
      ++identical;
    } else if (first.empty()) {
      first = name;
    }
  };
  for (int i = 0; i < 6; ++i) {
    const std::size_t nodes = rng.between(2, 5);
    const std::string script = random_scenario(rng, nodes);
    const std::uint64_t seed = rng.next();
    const bool ap = i % 2 == 0;
    check("sim " + std::to_string(i), [&] {
      sim::SimConfig cfg;
      cfg.node_count = nodes;
      cfg.replication_factor = std::min<std::size_t>(3, nodes);
      cfg.mode = ap ? sim::ConsistencyMode::kAP : sim::ConsistencyMode::kCP;
      cfg.seed = seed;
      cfg.drop_probability = 0.2;
      sim::Cluster c(cfg);
      sim::run_scenario(c, script);
      return c.trace().text();
    });
  }
  for (int i = 0; i < 2; ++i) {
    // Through the command-line entry point.
    const std::string path = "/tmp/robostore_acceptance_scenario_" + std::to_string(i) + ".txt";
    {
      std::ofstream(path) << random_scenario(rng, 3);
    }
    const std::string seed = std::to_string(rng.below(1000));
    check("cli sim " + std::to_string(i), [&] {
      std::ostringstream out, err;
      const char* argv[] = {"robostore", "--seed", seed.c_str(), "sim", "run", path.c_str(), "--mode", "ap", "--drop", "0.3"};
      cli::run(10, argv, out, err);
      return out.str();
    });
    std::remove(path.c_str());
  }
  for (int i = 0; i < 6; ++i) {
    const std::uint64_t seed = rng.between(1, 100000);
    check("txn " + std::to_string(seed), [&] { return testing::run_txn_workload(seed, true).trace; });
  }
  for (int i = 0; i < 6; ++i) {
    const std::uint64_t seed = rng.next();
    check("mapreduce " + std::to_string(i), [&] {
      Store store;
      store.create_table("t", {{"f", false}});
      sim::Rng data(seed);
      for (int r = 0; r < 200; ++r) {
        store.put({"t", "r" + std::to_string(r), "f", std::nullopt, "c"}, "ab ba ab " + std::to_string(data.below(5)));
      }
      mapreduce::Engine e(store, mapreduce::FunctionRegistry::with_builtins(), {.workers = 3, .seed = seed});
      e.loop().schedule_at(2, [&e] { e.fail_worker(1); });
      e.loop().schedule_at(9, [&e] { e.recover_worker(1); });
      const auto result = e.await(e.submit({"t", {}, "word-count", "", "sum", 4}));
      std::string text = e.trace().text();
      for (const auto& [k, v] : result) text += k + "=" + v + "\n";
      return text;
    });
  }
  std::string detail = std::to_string(identical) + "/" + std::to_string(scenarios) +
                       " scenarios byte-identical on re-run (cluster, CLI, transactions, MapReduce)";
  if (!first.empty()) detail += "; first difference: " + first;
  return {identical == scenarios && scenarios == 20, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {1, "multi-version correctness", multi_version},
      {2, "timestamp-latest retrieval", index_latest},
      {3, "tablet location", tablet_location},
      {4, "2PC ACID under faults", txn_acid},
      {5, "consistent-read bypass", consistent_reads},
      {6, "MapReduce oracle equivalence", mapreduce_equivalence},
      {7, "shortest path", shortest_path},
      {8, "graph property fidelity", graph_fidelity},
      {9, "chain execution", chain_execution},
      {10, "CAP modes", cap_modes},
      {11, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " AC" << c.id << " " << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
