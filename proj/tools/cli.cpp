#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robostore/chain.hpp"
#include "robostore/document.hpp"
#include "robostore/error.hpp"
#include "robostore/graph.hpp"
#include "robostore/locator.hpp"
#include "robostore/mapreduce.hpp"
#include "robostore/sim/cluster.hpp"
#include "robostore/txn/cloudtps.hpp"

namespace robostore::cli {
namespace {

using json = nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
    if (!out.flush()) throw UsageError("cannot write " + path);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string unescape_or_throw(const std::string& text) {
  auto raw = unescape_component(text);
  if (!raw) throw UsageError("bad escape in " + text);
  return *raw;
}

Timestamp parse_ts(const std::string& text) {
  auto ts = Timestamp::parse(text);
  if (!ts) throw UsageError("bad timestamp " + text);
  return *ts;
}

ColumnPath parse_path(const std::string& text) {
  auto path = ColumnPath::parse(text);
  if (!path) throw UsageError("bad column path " + text);
  return *path;
}

IndexOwner parse_owner(const std::string& text) {
  auto parts = split(text, '/');
  if (parts.size() != 3) throw UsageError("index owner is table/row/family: " + text);
  return IndexOwner{unescape_or_throw(parts[0]), unescape_or_throw(parts[1]), unescape_or_throw(parts[2])};
}

std::string format_cost(double cost) {
  std::ostringstream s;
  s.precision(17);
  s << cost;
  return s.str();
}

// Shared state of one invocation.
struct Context {
  std::ostream& out;
  std::string db_path;
  std::optional<std::uint64_t> seed_flag;
  std::string config_path;
  json config = json::object();

  std::uint64_t seed() const {
    if (seed_flag) return *seed_flag;
    if (config.contains("seed")) return config["seed"].get<std::uint64_t>();
    if (const char* env = std::getenv("ROBOSTORE_SEED")) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used == std::string(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw UsageError(std::string("bad ROBOSTORE_SEED: ") + env);
    }
    return 1;
  }

  json section(const char* name) const {
    if (!config.contains(name)) return json::object();
    const json& s = config[name];
    if (!s.is_object()) throw UsageError(std::string("config section ") + name + " must be an object");
    return s;
  }

  void need_db() const {
    if (db_path.empty()) throw UsageError("--db is required");
  }

  void load_db(Database& db) const {
    if (db_path.empty() || !std::filesystem::exists(db_path)) return;
    load_document(read_file(db_path), db);
  }

  void save_db(const Database& db) const {
    if (!db_path.empty()) write_file(db_path, dump_document(db));
  }
};

template <typename T>
void take(const json& section, const char* key, T& target) {
  if (section.contains(key)) target = section[key].get<T>();
}

// ---- storage ----

void cmd_load(Context& ctx, const std::string& file) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  const auto before = db.store.table_names().size();
  load_document(read_file(file), db);
  ctx.save_db(db);
  ctx.out << "LOADED " << db.store.table_names().size() - before << "\n";
}

void cmd_dump(Context& ctx, const std::string& out_file) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  const std::string text = dump_document(db);
  if (out_file.empty()) {
    ctx.out << text;
  } else {
    write_file(out_file, text);
  }
}

struct PutArgs {
  std::string path;
  std::string value;
  std::string ts;
  bool erase = false;
  bool index = false;
  std::string label;
};

void cmd_put(Context& ctx, const PutArgs& a) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  const ColumnPath path = parse_path(a.path);
  std::optional<Timestamp> ts;
  if (!a.ts.empty()) ts = parse_ts(a.ts);
  Timestamp written;
  if (a.erase) {
    written = db.store.erase(path, ts);
  } else {
    written = db.store.put(path, a.value, ts);
  }
  ctx.out << "OK " << written.to_string() << "\n";
  if (a.index) {
    auto entry = db.index.record(IndexOwner{path.table, path.row_key, path.family}, a.label, written, path);
    ctx.out << "INDEX " << entry.label << " " << entry.ts.to_string() << "\n";
  }
  ctx.save_db(db);
}

void print_index_entry(std::ostream& out, const TimestampIndexEntry& e) {
  out << "INDEX " << e.label << " " << e.ts.to_string();
  if (const auto* v = std::get_if<Bytes>(&e.target)) {
    out << " VALUE " << escape_component(*v) << "\n";
  } else {
    out << " PATH " << std::get<ColumnPath>(e.target).to_string() << "\n";
  }
}

struct GetArgs {
  std::string path;
  std::string at;
  bool versions = false;
  bool index = false;
  std::string from;
  std::string to;
};

void cmd_get(Context& ctx, const GetArgs& a) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  if (a.index) {
    const IndexOwner owner = parse_owner(a.path);
    if (!a.from.empty() || !a.to.empty()) {
      const Timestamp lo = a.from.empty() ? Timestamp{0} : parse_ts(a.from);
      const Timestamp hi = a.to.empty() ? Timestamp::max() : parse_ts(a.to);
      const auto hits = db.index.range(owner, lo, hi);
      if (hits.empty()) ctx.out << "ABSENT\n";
      for (const auto& e : hits) print_index_entry(ctx.out, e);
      return;
    }
    if (auto e = db.index.latest(owner)) {
      print_index_entry(ctx.out, *e);
    } else {
      ctx.out << "ABSENT\n";
    }
    return;
  }
  const ColumnPath path = parse_path(a.path);
  if (a.versions) {
    const auto all = db.store.versions(path);
    if (all.empty()) ctx.out << "ABSENT\n";
    for (const Cell& c : all) {
      if (c.tombstone) {
        ctx.out << "TOMBSTONE " << c.ts.to_string() << "\n";
      } else {
        ctx.out << "VERSION " << c.ts.to_string() << " " << escape_component(c.value) << "\n";
      }
    }
    return;
  }
  const auto cell = a.at.empty() ? db.store.get_latest(path) : db.store.get_at(path, parse_ts(a.at));
  if (!cell) {
    ctx.out << "ABSENT\n";
  } else {
    ctx.out << "VALUE " << cell->ts.to_string() << " " << escape_component(cell->value) << "\n";
  }
}

struct ScanArgs {
  std::string table;
  std::string start;
  std::string end;
  std::string family;
  std::string super_key;
  std::string column;
  std::optional<std::string> equals;
  std::string from;
  std::string to;
  std::size_t limit = 0;
};

void cmd_scan(Context& ctx, const ScanArgs& a) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  ScanFilter f;
  f.start_row = a.start;
  f.end_row = a.end;
  if (!a.family.empty()) f.family = a.family;
  if (!a.super_key.empty()) f.super_key = a.super_key;
  if (!a.column.empty()) f.column = a.column;
  f.value_equals = a.equals;
  if (!a.from.empty() || !a.to.empty()) {
    f.ts_window = {a.from.empty() ? Timestamp{0} : parse_ts(a.from), a.to.empty() ? Timestamp::max() : parse_ts(a.to)};
  }
  f.limit = a.limit;
  for (const ScanRow& row : db.store.scan(a.table, f)) {
    for (const ScanCell& c : row.cells) {
      ctx.out << "CELL " << c.path.to_string() << " " << c.cell.ts.to_string() << " "
              << escape_component(c.cell.value) << "\n";
    }
  }
}

// ---- location ----

// Layout lines: ROOT <node> | META <table> <node> | USER <table> <start> <node>
// with "-" for the empty start key.
location::TabletHierarchy parse_layout(const std::string& text) {
  std::optional<location::TabletHierarchy> h;
  std::map<std::string, std::string> meta;
  std::map<std::string, std::map<Bytes, std::string>> users;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    const std::string where = "layout line " + std::to_string(no);
    if (w[0] == "ROOT" && w.size() == 2) {
      if (h) throw Error(ErrorCode::kParseError, where + ": second ROOT");
      h.emplace(w[1]);
    } else if (w[0] == "META" && w.size() == 3) {
      meta[w[1]] = w[2];
    } else if (w[0] == "USER" && w.size() == 4) {
      const Bytes start = w[2] == "-" ? Bytes{} : unescape_or_throw(w[2]);
      users[w[1]][start] = w[3];
    } else {
      throw Error(ErrorCode::kParseError, where + ": expected ROOT, META or USER");
    }
  }
  if (!h) throw Error(ErrorCode::kParseError, "layout has no ROOT line");
  for (const auto& [table, splits] : users) {
    auto m = meta.find(table);
    if (m == meta.end()) throw Error(ErrorCode::kParseError, "layout has no META line for " + table);
    h->add_table(table, m->second, {splits.begin(), splits.end()});
  }
  return std::move(*h);
}

struct LocateArgs {
  std::string layout;
  std::string table;
  std::string key;
  std::string log;
};

void cmd_locate(Context& ctx, const LocateArgs& a) {
  const auto hierarchy = parse_layout(read_file(a.layout));
  location::QueryLog log;
  const bool have_log = !a.log.empty();
  if (have_log && std::filesystem::exists(a.log)) log = location::QueryLog::parse(read_file(a.log));
  location::LocatorClient client(hierarchy, have_log ? &log : nullptr);
  if (have_log) client.warm_from_log(log);
  const auto r = client.locate(a.table, a.key);
  for (const auto& hop : r.hops) ctx.out << "HOP " << location::to_string(hop.level) << " " << hop.node << "\n";
  ctx.out << "RESULT " << r.location.node << "\n";
  if (have_log) write_file(a.log, log.to_text());
}

// ---- transactions ----

struct TxnArgs {
  std::string script;
  std::optional<std::size_t> ltms;
  std::optional<std::size_t> replicas;
  std::optional<double> drop;
};

void cmd_txn_run(Context& ctx, const TxnArgs& a) {
  Database db;
  ctx.load_db(db);
  txn::TxnConfig cfg;
  const json s = ctx.section("txn");
  take(s, "ltms", cfg.ltm_count);
  take(s, "replicas", cfg.replicas);
  take(s, "drop", cfg.drop_probability);
  take(s, "min_delay", cfg.min_delay);
  take(s, "max_delay", cfg.max_delay);
  take(s, "prepare_timeout", cfg.prepare_timeout);
  take(s, "retry_interval", cfg.retry_interval);
  take(s, "op_deadline", cfg.op_deadline);
  if (a.ltms) cfg.ltm_count = *a.ltms;
  if (a.replicas) cfg.replicas = *a.replicas;
  if (a.drop) cfg.drop_probability = *a.drop;
  cfg.seed = ctx.seed();
  txn::TxnCluster cluster(db.store, cfg);
  try {
    txn::run_script(cluster, read_file(a.script));
  } catch (...) {
    ctx.out << cluster.trace().text();
    throw;
  }
  ctx.out << cluster.trace().text();
  ctx.save_db(db);
}

// ---- mapreduce ----

struct MrArgs {
  std::string fn;
  std::string table;
  std::size_t splits = 1;
  std::string param;
  std::optional<std::size_t> workers;
  std::vector<std::string> fail;
  bool trace = false;
};

void cmd_mr_run(Context& ctx, const MrArgs& a) {
  Database db;
  ctx.load_db(db);
  const auto fns = split(a.fn, ',');
  if (fns.size() != 2) throw UsageError("--fn takes <map>,<reduce>");
  mapreduce::EngineConfig cfg;
  const json s = ctx.section("mr");
  take(s, "workers", cfg.workers);
  take(s, "max_retries", cfg.max_retries);
  take(s, "min_task_ticks", cfg.min_task_ticks);
  take(s, "max_task_ticks", cfg.max_task_ticks);
  if (a.workers) cfg.workers = *a.workers;
  cfg.seed = ctx.seed();
  mapreduce::Engine engine(db.store, mapreduce::FunctionRegistry::with_builtins(), cfg);
  mapreduce::JobSpec spec;
  spec.table = a.table;
  spec.map_fn = fns[0];
  spec.reduce_fn = fns[1];
  spec.map_param = a.param;
  spec.num_splits = a.splits;
  const auto job = engine.submit(spec);
  // --fail <worker>@<tick>
  for (const auto& f : a.fail) {
    const auto parts = split(f, '@');
    sim::NodeId worker = 0;
    sim::Tick at = 0;
    try {
      if (parts.size() != 2) throw std::invalid_argument(f);
      worker = std::stoull(parts[0]);
      at = std::stoull(parts[1]);
    } catch (const std::exception&) {
      throw UsageError("--fail takes <worker>@<tick>: " + f);
    }
    engine.loop().schedule_at(at, [&engine, worker] { engine.fail_worker(worker); });
  }
  std::optional<mapreduce::Result> result;
  try {
    result = engine.await(job);
  } catch (...) {
    if (a.trace) ctx.out << engine.trace().text();
    throw;
  }
  if (a.trace) ctx.out << engine.trace().text();
  for (const auto& [k, v] : *result) ctx.out << "RESULT " << escape_component(k) << " " << escape_component(v) << "\n";
}

// ---- graph ----

struct PlanArgs {
  std::string graph;
  graph::NodeId from = 0;
  graph::NodeId to = 0;
  std::string algo = "dijkstra";
  std::string heuristic = "euclidean";
};

void cmd_plan(Context& ctx, const PlanArgs& a) {
  const graph::Graph g = graph::Graph::parse(read_file(a.graph));
  std::optional<graph::Path> path;
  if (a.algo == "dijkstra") {
    path = g.shortest_path(a.from, a.to, graph::Algorithm::kDijkstra);
  } else {
    graph::Heuristic h;
    if (a.heuristic == "euclidean") h = g.euclidean_heuristic(a.to);
    path = g.shortest_path(a.from, a.to, graph::Algorithm::kAStar, h);
  }
  if (!path) {
    ctx.out << "NOPATH\n";
    return;
  }
  ctx.out << "PATH ";
  for (std::size_t i = 0; i < path->nodes.size(); ++i) ctx.out << (i ? "," : "") << path->nodes[i];
  ctx.out << " COST " << format_cost(path->cost) << "\n";
}

// ---- chains ----

std::vector<std::string> body_parts(const Context& ctx, const std::string& flag) {
  if (!flag.empty()) return split(flag, ',');
  const json s = ctx.section("chain");
  if (s.contains("body_parts")) return s["body_parts"].get<std::vector<std::string>>();
  return {"head", "arm", "leg", "wheel"};
}

chain::InstructionRef parse_ref(const std::string& text, const std::string& where) {
  auto ref = chain::InstructionRef::parse(text);
  if (!ref) throw Error(ErrorCode::kParseError, where + ": bad instruction reference " + text);
  return *ref;
}

// One instruction per line:
//   <part>/<id> <action> <level> [next=<part>/<id>] [end] [branch=<key>:<part>/<id>]
// <level> is 0..9, or a real in [0,1] when it contains a '.'.
std::vector<chain::Instruction> parse_chain_file(const std::string& text) {
  std::vector<chain::Instruction> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    const std::string where = "chain line " + std::to_string(no);
    if (w.size() < 3) throw Error(ErrorCode::kParseError, where + ": expected <ref> <action> <level>");
    chain::Instruction ins;
    ins.ref = parse_ref(w[0], where);
    ins.action = unescape_or_throw(w[1]);
    if (w[2].find('.') != std::string::npos) {
      double x = 0;
      try {
        x = std::stod(w[2]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, where + ": bad level " + w[2]);
      }
      ins.target = chain::quantize(x);
    } else if (w[2].size() == 1 && w[2][0] >= '0' && w[2][0] <= '9') {
      ins.target = chain::FuzzyState{w[2][0] - '0'};
    } else {
      throw Error(ErrorCode::kParseError, where + ": bad level " + w[2]);
    }
    for (std::size_t i = 3; i < w.size(); ++i) {
      const std::string& t = w[i];
      if (t == "end") {
        ins.terminal = true;
      } else if (t.rfind("next=", 0) == 0) {
        ins.next = parse_ref(t.substr(5), where);
      } else if (t.rfind("branch=", 0) == 0) {
        const auto body = t.substr(7);
        const auto colon = body.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::kParseError, where + ": branch takes <key>:<ref>");
        ins.branch_key = unescape_or_throw(body.substr(0, colon));
        ins.branch_next = parse_ref(body.substr(colon + 1), where);
      } else {
        throw Error(ErrorCode::kParseError, where + ": unknown token " + t);
      }
    }
    out.push_back(std::move(ins));
  }
  return out;
}

struct ChainArgs {
  std::string task;
  std::string file;
  std::string parts;
  std::string context;
};

void cmd_chain_store(Context& ctx, const ChainArgs& a) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  chain::ChainStore chains(db.store, body_parts(ctx, a.parts));
  const auto head = chains.store_chain(a.task, parse_chain_file(read_file(a.file)));
  ctx.save_db(db);
  ctx.out << "STORED " << a.task << " " << head.to_string() << "\n";
}

void cmd_chain_run(Context& ctx, const ChainArgs& a) {
  ctx.need_db();
  Database db;
  ctx.load_db(db);
  std::map<std::string, Bytes> context;
  if (!a.context.empty()) {
    for (const auto& kv : split(a.context, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--ctx takes k=v pairs: " + kv);
      context[unescape_or_throw(kv.substr(0, eq))] = unescape_or_throw(kv.substr(eq + 1));
    }
  }
  const chain::ChainStore chains(db.store, body_parts(ctx, a.parts));
  for (const auto& step : chains.execute(a.task, context)) {
    ctx.out << "STEP " << step.ref.to_string() << " " << escape_component(step.action) << " " << step.target.level
            << "\n";
  }
}

// ---- cluster scenarios ----

struct SimArgs {
  std::string script;
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> replication;
  std::string mode;
  std::optional<double> drop;
};

void cmd_sim_run(Context& ctx, const SimArgs& a) {
  sim::SimConfig cfg;
  const json s = ctx.section("sim");
  take(s, "nodes", cfg.node_count);
  take(s, "replication", cfg.replication_factor);
  take(s, "drop", cfg.drop_probability);
  take(s, "min_delay", cfg.min_delay);
  take(s, "max_delay", cfg.max_delay);
  take(s, "op_timeout", cfg.op_timeout);
  take(s, "retry_interval", cfg.retry_interval);
  take(s, "anti_entropy_period", cfg.anti_entropy_period);
  std::string mode = s.value("mode", std::string("cp"));
  if (!a.mode.empty()) mode = a.mode;
  if (mode == "cp") {
    cfg.mode = sim::ConsistencyMode::kCP;
  } else if (mode == "ap") {
    cfg.mode = sim::ConsistencyMode::kAP;
  } else {
    throw UsageError("--mode is cp or ap");
  }
  if (a.nodes) cfg.node_count = *a.nodes;
  if (a.replication) cfg.replication_factor = *a.replication;
  if (a.drop) cfg.drop_probability = *a.drop;
  cfg.seed = ctx.seed();
  sim::Cluster cluster(cfg);
  try {
    sim::run_scenario(cluster, read_file(a.script));
  } catch (...) {
    ctx.out << cluster.trace().text();
    throw;
  }
  ctx.out << cluster.trace().text();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"robostore: versioned column-family store with simulated cluster tools", "robostore"};
  app.require_subcommand(1);
  Context ctx{out, {}, {}, {}, json::object()};
  app.add_option("--db", ctx.db_path, "State document (braces-delimited data file)");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (falls back to ROBOSTORE_SEED)");
  app.add_option("--config", ctx.config_path, "JSON config file")->check(CLI::ExistingFile);

  std::function<void()> action;

  std::string load_file;
  auto* load = app.add_subcommand("load", "Load a data file into the state document");
  load->add_option("file", load_file)->required()->check(CLI::ExistingFile);
  load->callback([&] { action = [&] { cmd_load(ctx, load_file); }; });

  std::string dump_file;
  auto* dump = app.add_subcommand("dump", "Print the state document");
  dump->add_option("--out", dump_file, "Write to a file instead of stdout");
  dump->callback([&] { action = [&] { cmd_dump(ctx, dump_file); }; });

  PutArgs put_args;
  auto* put = app.add_subcommand("put", "Write one cell");
  put->add_option("path", put_args.path, "table/row/family[/super]/column")->required();
  put->add_option("value", put_args.value);
  put->add_option("--ts", put_args.ts, "Explicit timestamp");
  put->add_flag("--delete", put_args.erase, "Write a tombstone instead");
  put->add_flag("--index", put_args.index, "Record the stamp in the family's timestamp index");
  put->add_option("--label", put_args.label, "Index label (default: next T<n>)");
  put->callback([&] { action = [&] { cmd_put(ctx, put_args); }; });

  GetArgs get_args;
  auto* get = app.add_subcommand("get", "Read one cell, or an index with --index");
  get->add_option("path", get_args.path, "Column path, or table/row/family with --index")->required();
  get->add_option("--at", get_args.at, "Newest version at or before this timestamp");
  get->add_flag("--versions", get_args.versions, "List every version");
  get->add_flag("--index", get_args.index, "Query the timestamp index");
  get->add_option("--from", get_args.from, "Index range lower bound");
  get->add_option("--to", get_args.to, "Index range upper bound");
  get->callback([&] { action = [&] { cmd_get(ctx, get_args); }; });

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Scan a table");
  scan->add_option("table", scan_args.table)->required();
  scan->add_option("--start", scan_args.start, "First row (inclusive)");
  scan->add_option("--end", scan_args.end, "Last row (exclusive)");
  scan->add_option("--family", scan_args.family);
  scan->add_option("--super", scan_args.super_key);
  scan->add_option("--column", scan_args.column);
  scan->add_option("--equals", scan_args.equals);
  scan->add_option("--from", scan_args.from, "Version window lower bound");
  scan->add_option("--to", scan_args.to, "Version window upper bound");
  scan->add_option("--limit", scan_args.limit, "Max rows");
  scan->callback([&] { action = [&] { cmd_scan(ctx, scan_args); }; });

  LocateArgs locate_args;
  auto* locate = app.add_subcommand("locate", "Resolve a row to its tablet server");
  locate->add_option("--layout", locate_args.layout, "Tablet layout file")->required()->check(CLI::ExistingFile);
  locate->add_option("--table", locate_args.table)->required();
  locate->add_option("--key", locate_args.key)->required();
  locate->add_option("--log", locate_args.log, "Query log used to warm the cache and appended to");
  locate->callback([&] { action = [&] { cmd_locate(ctx, locate_args); }; });

  TxnArgs txn_args;
  auto* txn = app.add_subcommand("txn", "Distributed transactions");
  txn->require_subcommand(1);
  auto* txn_run = txn->add_subcommand("run", "Run a transaction script and print its trace");
  txn_run->add_option("script", txn_args.script)->required()->check(CLI::ExistingFile);
  txn_run->add_option("--ltms", txn_args.ltms);
  txn_run->add_option("--replicas", txn_args.replicas);
  txn_run->add_option("--drop", txn_args.drop, "Message drop probability");
  txn_run->callback([&] { action = [&] { cmd_txn_run(ctx, txn_args); }; });

  MrArgs mr_args;
  auto* mr = app.add_subcommand("mr", "MapReduce jobs");
  mr->require_subcommand(1);
  auto* mr_run = mr->add_subcommand("run", "Run one job and print its result");
  mr_run->add_option("--fn", mr_args.fn, "<map>,<reduce>")->required();
  mr_run->add_option("--table", mr_args.table)->required();
  mr_run->add_option("--splits", mr_args.splits)->required();
  mr_run->add_option("--param", mr_args.param, "Map parameter");
  mr_run->add_option("--workers", mr_args.workers);
  mr_run->add_option("--fail", mr_args.fail, "Fail a worker: <worker>@<tick>");
  mr_run->add_flag("--trace", mr_args.trace, "Print the event trace first");
  mr_run->callback([&] { action = [&] { cmd_mr_run(ctx, mr_args); }; });

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Shortest path over a graph file");
  plan->add_option("--graph", plan_args.graph)->required()->check(CLI::ExistingFile);
  plan->add_option("--from", plan_args.from)->required();
  plan->add_option("--to", plan_args.to)->required();
  plan->add_option("--algo", plan_args.algo)->check(CLI::IsMember({"dijkstra", "astar"}));
  plan->add_option("--heuristic", plan_args.heuristic, "A* heuristic")->check(CLI::IsMember({"euclidean", "zero"}));
  plan->callback([&] { action = [&] { cmd_plan(ctx, plan_args); }; });

  ChainArgs chain_args;
  auto* chain_cmd = app.add_subcommand("chain", "Instruction chains");
  chain_cmd->require_subcommand(1);
  auto* chain_store = chain_cmd->add_subcommand("store", "Store a chain file under a task name");
  chain_store->add_option("--task", chain_args.task)->required();
  chain_store->add_option("--file", chain_args.file)->required()->check(CLI::ExistingFile);
  chain_store->add_option("--parts", chain_args.parts, "Body parts, comma separated");
  chain_store->callback([&] { action = [&] { cmd_chain_store(ctx, chain_args); }; });
  auto* chain_run = chain_cmd->add_subcommand("run", "Execute a stored task");
  chain_run->add_option("--task", chain_args.task)->required();
  chain_run->add_option("--ctx", chain_args.context, "Context values k=v,...");
  chain_run->add_option("--parts", chain_args.parts, "Body parts, comma separated");
  chain_run->callback([&] { action = [&] { cmd_chain_run(ctx, chain_args); }; });

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("sim", "Replicated cluster scenarios");
  sim_cmd->require_subcommand(1);
  auto* sim_run = sim_cmd->add_subcommand("run", "Run a scenario script and print its trace");
  sim_run->add_option("script", sim_args.script)->required()->check(CLI::ExistingFile);
  sim_run->add_option("--nodes", sim_args.nodes);
  sim_run->add_option("--replication", sim_args.replication);
  sim_run->add_option("--mode", sim_args.mode)->check(CLI::IsMember({"cp", "ap"}));
  sim_run->add_option("--drop", sim_args.drop, "Message drop probability");
  sim_run->callback([&] { action = [&] { cmd_sim_run(ctx, sim_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) ctx.seed_flag = seed;

  try {
    if (!ctx.config_path.empty()) {
      ctx.config = json::parse(read_file(ctx.config_path));
      if (!ctx.config.is_object()) throw UsageError("config must be a JSON object");
    }
    if (action) action();
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace robostore::cli
