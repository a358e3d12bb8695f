#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "robostore/chain.hpp"
#include "robostore/document.hpp"
#include "robostore/error.hpp"
#include "robostore/graph.hpp"
#include "robostore/mapreduce.hpp"
#include "robostore/sim/cluster.hpp"
#include "robostore/txn/cloudtps.hpp"

namespace py = pybind11;
using namespace robostore;

namespace {

// Timestamps are 128-bit; Python ints carry them through their decimal form.
py::int_ to_py(Timestamp ts) { return py::int_(py::str(ts.to_string())); }

std::optional<Timestamp> from_py(const std::optional<py::int_>& v) {
  if (!v) return std::nullopt;
  auto ts = Timestamp::parse(std::string(py::str(*v)));
  if (!ts) throw py::value_error("timestamp must be a non-negative integer below 2**128");
  return *ts;
}

ColumnPath path_or_throw(const std::string& text) {
  auto p = ColumnPath::parse(text);
  if (!p) throw py::value_error("bad column path: " + text);
  return *p;
}

py::tuple cell_tuple(const Cell& c) { return py::make_tuple(py::bytes(c.value), to_py(c.ts), c.tombstone); }

}  // namespace

PYBIND11_MODULE(_robostore, m) {
  m.doc() = "Versioned column-family store with simulated cluster tools";

  static py::exception<Error> error(m, "RobostoreError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object value = exc(std::string(to_string(e.code())) + ": " + e.what());
      value.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(exc.ptr(), value.ptr());
    }
  });

  py::class_<Database>(m, "Database")
      .def(py::init<>())
      .def(
          "create_table",
          [](Database& db, const std::string& name, const std::vector<std::string>& families,
             const std::vector<std::string>& super_families) {
            std::vector<FamilySpec> specs;
            for (const auto& f : families) specs.push_back({f, false});
            for (const auto& f : super_families) specs.push_back({f, true});
            db.store.create_table(name, std::move(specs));
          },
          py::arg("name"), py::arg("families"), py::arg("super_families") = std::vector<std::string>{})
      .def("tables", [](const Database& db) { return db.store.table_names(); })
      .def(
          "put",
          [](Database& db, const std::string& path, const Bytes& value, std::optional<py::int_> ts) {
            return to_py(db.store.put(path_or_throw(path), value, from_py(ts)));
          },
          py::arg("path"), py::arg("value"), py::arg("ts") = py::none())
      .def(
          "delete",
          [](Database& db, const std::string& path, std::optional<py::int_> ts) {
            return to_py(db.store.erase(path_or_throw(path), from_py(ts)));
          },
          py::arg("path"), py::arg("ts") = py::none())
      .def(
          "get",
          [](const Database& db, const std::string& path, std::optional<py::int_> at) -> py::object {
            const auto p = path_or_throw(path);
            const auto c = at ? db.store.get_at(p, *from_py(at)) : db.store.get_latest(p);
            if (!c) return py::none();
            return py::make_tuple(py::bytes(c->value), to_py(c->ts));
          },
          py::arg("path"), py::arg("at") = py::none(), "(value, ts) or None")
      .def("versions",
           [](const Database& db, const std::string& path) {
             py::list out;
             for (const Cell& c : db.store.versions(path_or_throw(path))) out.append(cell_tuple(c));
             return out;
           })
      .def(
          "scan",
          [](const Database& db, const std::string& table, const Bytes& start, const Bytes& end,
             std::optional<std::string> family, std::optional<std::string> column, std::size_t limit) {
            ScanFilter f;
            f.start_row = start;
            f.end_row = end;
            f.family = std::move(family);
            f.column = std::move(column);
            f.limit = limit;
            py::list out;
            for (const auto& row : db.store.scan(table, f)) {
              for (const auto& c : row.cells) {
                out.append(py::make_tuple(c.path.to_string(), to_py(c.cell.ts), py::bytes(c.cell.value)));
              }
            }
            return out;
          },
          py::arg("table"), py::arg("start") = "", py::arg("end") = "", py::arg("family") = py::none(),
          py::arg("column") = py::none(), py::arg("limit") = 0)
      .def(
          "index_put",
          [](Database& db, const std::string& path, const Bytes& value, std::optional<py::int_> ts,
             const std::string& label) {
            const auto p = path_or_throw(path);
            const Timestamp written = db.store.put(p, value, from_py(ts));
            auto e = db.index.record(IndexOwner{p.table, p.row_key, p.family}, label, written, p);
            return py::make_tuple(e.label, to_py(e.ts));
          },
          py::arg("path"), py::arg("value"), py::arg("ts") = py::none(), py::arg("label") = "",
          "Write a cell and stamp it in its family's timestamp index")
      .def(
          "index_latest",
          [](const Database& db, const std::string& table, const Bytes& row, const std::string& family)
              -> py::object {
            auto e = db.index.latest(IndexOwner{table, row, family});
            if (!e) return py::none();
            py::object target;
            if (const auto* v = std::get_if<Bytes>(&e->target)) {
              target = py::bytes(*v);
            } else {
              target = py::str(std::get<ColumnPath>(e->target).to_string());
            }
            return py::make_tuple(e->label, to_py(e->ts), target);
          },
          "(label, ts, target): target is bytes for an inline value, str for a column path")
      .def("dump", [](const Database& db) { return dump_document(db); })
      .def("load", [](Database& db, const std::string& text) { load_document(text, db); })
      .def(
          "store_chain",
          [](Database& db, const std::string& task, const py::list& steps, const std::vector<std::string>& parts) {
            std::vector<chain::Instruction> ins;
            for (const auto& item : steps) {
              auto d = item.cast<py::dict>();
              chain::Instruction i;
              auto ref = chain::InstructionRef::parse(d["ref"].cast<std::string>());
              if (!ref) throw py::value_error("bad instruction ref");
              i.ref = *ref;
              i.action = d["action"].cast<std::string>();
              i.target = chain::quantize(d["state"].cast<double>());
              if (d.contains("next")) i.next = chain::InstructionRef::parse(d["next"].cast<std::string>());
              if (d.contains("terminal")) i.terminal = d["terminal"].cast<bool>();
              if (d.contains("branch_key")) {
                i.branch_key = d["branch_key"].cast<Bytes>();
                i.branch_next = chain::InstructionRef::parse(d["branch_next"].cast<std::string>());
              }
              ins.push_back(std::move(i));
            }
            chain::ChainStore store(db.store, parts);
            return store.store_chain(task, ins).to_string();
          },
          py::arg("task"), py::arg("steps"), py::arg("parts") = std::vector<std::string>{"head", "arm", "leg", "wheel"},
          "steps: dicts with ref, action, state in [0,1], optional next/terminal/branch_key/branch_next")
      .def(
          "run_chain",
          [](Database& db, const std::string& task, const std::map<std::string, Bytes>& context) {
            const chain::ChainStore store(db.store, {"head", "arm", "leg", "wheel"});
            py::list out;
            for (const auto& s : store.execute(task, context)) {
              out.append(py::make_tuple(s.ref.to_string(), s.action, s.target.level));
            }
            return out;
          },
          py::arg("task"), py::arg("context") = std::map<std::string, Bytes>{})
      .def(
          "mapreduce",
          [](const Database& db, const std::string& table, const std::string& map_fn, const std::string& reduce_fn,
             std::size_t splits, const Bytes& param, std::size_t workers, std::uint64_t seed,
             const std::vector<std::pair<sim::NodeId, sim::Tick>>& failures) {
            mapreduce::EngineConfig cfg;
            cfg.workers = workers;
            cfg.seed = seed;
            mapreduce::Engine engine(db.store, mapreduce::FunctionRegistry::with_builtins(), cfg);
            const auto job = engine.submit({table, {}, map_fn, param, reduce_fn, splits});
            for (const auto& [w, at] : failures) engine.loop().schedule_at(at, [&engine, w = w] { engine.fail_worker(w); });
            py::dict out;
            for (const auto& [k, v] : engine.await(job)) out[py::bytes(k)] = py::bytes(v);
            return out;
          },
          py::arg("table"), py::arg("map_fn"), py::arg("reduce_fn"), py::arg("splits"), py::arg("param") = "",
          py::arg("workers") = 3, py::arg("seed") = 1,
          py::arg("failures") = std::vector<std::pair<sim::NodeId, sim::Tick>>{},
          "failures: (worker, tick) pairs")
      .def(
          "run_txn_script",
          [](Database& db, const std::string& script, std::uint64_t seed, std::size_t ltms, std::size_t replicas,
             double drop) {
            txn::TxnConfig cfg;
            cfg.seed = seed;
            cfg.ltm_count = ltms;
            cfg.replicas = replicas;
            cfg.drop_probability = drop;
            txn::TxnCluster cluster(db.store, cfg);
            txn::run_script(cluster, script);
            return cluster.trace().text();
          },
          py::arg("script"), py::arg("seed") = 1, py::arg("ltms") = 4, py::arg("replicas") = 2, py::arg("drop") = 0.0,
          "Runs a transaction script against this database and returns the trace");

  py::class_<graph::Graph>(m, "Graph")
      .def(py::init<>())
      .def_static("parse", &graph::Graph::parse)
      .def("to_text", &graph::Graph::to_text)
      .def("create_node", &graph::Graph::create_node, py::arg("weight") = 0.0)
      .def("add_node", &graph::Graph::add_node, py::arg("id"), py::arg("weight") = 0.0)
      .def("create_relationship", &graph::Graph::create_relationship, py::arg("source"), py::arg("target"),
           py::arg("type"), py::arg("length") = 1.0)
      .def("set_weight", &graph::Graph::set_weight)
      .def("set_position", &graph::Graph::set_position)
      .def("set_node_property",
           [](graph::Graph& g, graph::NodeId id, const std::string& name, const Bytes& value) {
             g.set_property(graph::Element::node(id), name, value);
           })
      .def("set_relationship_property",
           [](graph::Graph& g, graph::RelId id, const std::string& name, const Bytes& value) {
             g.set_property(graph::Element::rel(id), name, value);
           })
      .def("node_property",
           [](const graph::Graph& g, graph::NodeId id, const std::string& name) -> py::object {
             auto v = g.get_property(graph::Element::node(id), name);
             return v ? py::object(py::bytes(*v)) : py::object(py::none());
           })
      .def("relationship_property",
           [](const graph::Graph& g, graph::RelId id, const std::string& name) -> py::object {
             auto v = g.get_property(graph::Element::rel(id), name);
             return v ? py::object(py::bytes(*v)) : py::object(py::none());
           })
      .def("node_ids", &graph::Graph::node_ids)
      .def(
          "shortest_path",
          [](const graph::Graph& g, graph::NodeId start, graph::NodeId goal, const std::string& algo,
             const std::string& heuristic) -> py::object {
            std::optional<graph::Path> p;
            if (algo == "dijkstra") {
              p = g.shortest_path(start, goal, graph::Algorithm::kDijkstra);
            } else if (algo == "astar") {
              graph::Heuristic h;
              if (heuristic == "euclidean") {
                h = g.euclidean_heuristic(goal);
              } else if (heuristic != "zero") {
                throw py::value_error("heuristic is euclidean or zero");
              }
              p = g.shortest_path(start, goal, graph::Algorithm::kAStar, h);
            } else {
              throw py::value_error("algo is dijkstra or astar");
            }
            if (!p) return py::none();
            return py::make_tuple(p->nodes, p->cost);
          },
          py::arg("start"), py::arg("goal"), py::arg("algo") = "dijkstra", py::arg("heuristic") = "euclidean",
          "(nodes, cost) or None when unreachable");

  m.def(
      "run_scenario",
      [](const std::string& script, std::uint64_t seed, std::size_t nodes, std::size_t replication,
         const std::string& mode, double drop) {
        sim::SimConfig cfg;
        cfg.seed = seed;
        cfg.node_count = nodes;
        cfg.replication_factor = replication;
        cfg.drop_probability = drop;
        if (mode == "cp") {
          cfg.mode = sim::ConsistencyMode::kCP;
        } else if (mode == "ap") {
          cfg.mode = sim::ConsistencyMode::kAP;
        } else {
          throw py::value_error("mode is cp or ap");
        }
        sim::Cluster cluster(cfg);
        sim::run_scenario(cluster, script);
        return cluster.trace().text();
      },
      py::arg("script"), py::arg("seed") = 1, py::arg("nodes") = 3, py::arg("replication") = 3,
      py::arg("mode") = "cp", py::arg("drop") = 0.0, "Runs a cluster scenario script and returns the trace");

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"robostore"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs the command-line tool in-process: (exit code, stdout, stderr)");
}
