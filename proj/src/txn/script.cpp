#include <charconv>
#include <map>

#include "robostore/error.hpp"
#include "robostore/txn/cloudtps.hpp"

namespace robostore::txn {

namespace {

std::uint64_t number(const sim::Statement& st, const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": expected a number, got " + text);
  }
  return v;
}

ColumnPath path_arg(const sim::Statement& st, const std::string& text) {
  auto p = ColumnPath::parse(text);
  if (!p) throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": bad column path " + text);
  return *p;
}

void need(const sim::Statement& st, std::size_t lo, std::size_t hi) {
  if (st.args.size() < lo || st.args.size() > hi) {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": wrong argument count for " + st.verb);
  }
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

void run_script(TxnCluster& cluster, std::string_view script) {
  std::map<std::string, TxnId> named;
  std::optional<TxnId> last;
  auto& trace = cluster.trace();
  auto& loop = cluster.loop();

  for (sim::Statement st : sim::parse_script(script)) {
    std::optional<std::string> name;
    if (!st.verb.empty() && st.verb[0] == '@') {
      if (st.args.empty()) throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": missing verb");
      name = st.verb.substr(1);
      st.verb = upper(st.args.front());
      st.args.erase(st.args.begin());
    }
    auto target = [&]() -> TxnId {
      if (name) {
        auto it = named.find(*name);
        if (it == named.end()) {
          throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": no txn named @" + *name);
        }
        return it->second;
      }
      if (!last) throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": no open txn");
      return *last;
    };

    const std::string& v = st.verb;
    try {
      if (v == "TABLE") {
        need(st, 2, 64);
        if (!cluster.store().has_table(st.args[0])) {
          std::vector<FamilySpec> fams;
          for (std::size_t i = 1; i < st.args.size(); ++i) {
            std::string f = st.args[i];
            bool super = false;
            if (f.size() > 6 && f.ends_with(":super")) {
              f.resize(f.size() - 6);
              super = true;
            }
            fams.push_back({f, super});
          }
          cluster.store().create_table(st.args[0], fams);
        }
      } else if (v == "BEGIN") {
        need(st, 0, 1);
        const auto ltm = st.args.empty() ? 0 : static_cast<LtmId>(number(st, st.args[0]));
        last = cluster.begin(ltm);
        if (name) named[*name] = *last;
      } else if (v == "READ") {
        need(st, 1, 1);
        cluster.t_read(target(), path_arg(st, st.args[0]));
      } else if (v == "WRITE") {
        need(st, 2, 2);
        auto value = unescape_component(st.args[1]);
        if (!value) throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": bad value escape");
        cluster.t_write(target(), path_arg(st, st.args[0]), *value);
      } else if (v == "COMMIT") {
        need(st, 0, 1);
        const TxnId id = target();
        if (!st.args.empty() && upper(st.args[0]) != "NOWAIT") {
          throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": unknown COMMIT option");
        }
        if (st.args.empty()) {
          const TxnState s = cluster.commit(id);
          trace.add(loop.now(), "client", "COMMIT " + id.to_string() + " -> " + std::string(to_string(s)));
        } else {
          cluster.commit_async(id);
        }
      } else if (v == "AWAIT") {
        need(st, 0, 0);
        const TxnId id = target();
        cluster.await(id, loop.now() + cluster.config().op_deadline);
        trace.add(loop.now(), "client", "AWAIT " + id.to_string() + " -> " + std::string(to_string(cluster.state(id))));
      } else if (v == "CREAD") {
        need(st, 1, 1);
        auto cell = cluster.consistent_read(path_arg(st, st.args[0]));
        trace.add(loop.now(), "client",
                  "CREAD " + st.args[0] + " -> " +
                      (cell ? escape_component(cell->value) + " ts=" + cell->ts.to_string() : std::string("ABSENT")));
      } else if (v == "CRASH") {
        need(st, 1, 1);
        cluster.crash_ltm(static_cast<LtmId>(number(st, st.args[0])));
      } else if (v == "RECOVER") {
        need(st, 1, 1);
        cluster.recover_ltm(static_cast<LtmId>(number(st, st.args[0])));
      } else if (v == "TICK") {
        need(st, 1, 1);
        cluster.tick(number(st, st.args[0]));
      } else if (v == "PARTITION") {
        need(st, 1, 1);
        cluster.partition(sim::parse_groups(st.args[0]));
      } else if (v == "HEAL") {
        need(st, 0, 0);
        cluster.heal();
      } else {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(st.line) + ": unknown verb " + v);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError) throw;
      trace.add(loop.now(), "client", v + " ERROR " + std::string(to_string(e.code())));
    }
  }
}

}  // namespace robostore::txn
