#include "robostore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>

#include "robostore/error.hpp"

namespace robostore::graph {

namespace {

void check_cost(double v, std::string_view what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidConfig, std::string(what) + " must be finite and non-negative");
  }
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string field(std::string_view raw) { return raw.empty() ? "-" : (raw == "-" ? "%2D" : escape_component(raw)); }

std::string unfield(std::string_view text, std::size_t line) {
  if (text == "-") return {};
  auto v = unescape_component(text);
  if (!v) throw Error(ErrorCode::kParseError, "graph line " + std::to_string(line) + ": bad escape");
  return *v;
}

}  // namespace

NodeId Graph::create_node(double weight) {
  check_cost(weight, "node weight");
  const NodeId id = next_node_++;
  nodes_[id] = GraphNode{id, {}, weight, std::nullopt};
  return id;
}

void Graph::add_node(NodeId id, double weight) {
  check_cost(weight, "node weight");
  if (nodes_.contains(id)) throw Error(ErrorCode::kInvalidConfig, "duplicate node " + std::to_string(id));
  nodes_[id] = GraphNode{id, {}, weight, std::nullopt};
  next_node_ = std::max(next_node_, id + 1);
}

RelId Graph::create_relationship(NodeId from, NodeId to, std::string type, double length) {
  check_cost(length, "relationship length");
  node(from);
  node(to);
  const RelId id = next_rel_++;
  rels_[id] = Relationship{id, from, to, std::move(type), {}, length};
  out_[from].push_back(id);
  in_[to].push_back(id);
  return id;
}

GraphNode& Graph::mutable_node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::kUnknownElement, "node " + std::to_string(id));
  return it->second;
}

const GraphNode& Graph::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::kUnknownElement, "node " + std::to_string(id));
  return it->second;
}

const Relationship& Graph::relationship(RelId id) const {
  auto it = rels_.find(id);
  if (it == rels_.end()) throw Error(ErrorCode::kUnknownElement, "relationship " + std::to_string(id));
  return it->second;
}

void Graph::set_weight(NodeId id, double weight) {
  check_cost(weight, "node weight");
  mutable_node(id).weight = weight;
}

void Graph::set_position(NodeId id, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw Error(ErrorCode::kInvalidConfig, "position must be finite");
  mutable_node(id).position = std::make_pair(x, y);
}

Properties& Graph::properties_of(Element e) {
  if (e.kind == Element::Kind::kNode) return mutable_node(e.id).properties;
  auto it = rels_.find(e.id);
  if (it == rels_.end()) throw Error(ErrorCode::kUnknownElement, "relationship " + std::to_string(e.id));
  return it->second.properties;
}

const Properties& Graph::properties_of(Element e) const {
  if (e.kind == Element::Kind::kNode) return node(e.id).properties;
  return relationship(e.id).properties;
}

void Graph::set_property(Element element, const std::string& name, Bytes value) {
  properties_of(element)[name] = std::move(value);
}

std::optional<Bytes> Graph::get_property(Element element, const std::string& name) const {
  const auto& props = properties_of(element);
  auto it = props.find(name);
  if (it == props.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> Graph::node_ids() const {
  std::vector<NodeId> out;
  for (const auto& [id, _] : nodes_) out.push_back(id);
  return out;
}

std::vector<RelId> Graph::relationship_ids() const {
  std::vector<RelId> out;
  for (const auto& [id, _] : rels_) out.push_back(id);
  return out;
}

std::set<NodeId> Graph::traverse(NodeId start, const std::optional<std::string>& rel_type, std::size_t max_depth,
                                 bool either_direction, bool include_start) const {
  node(start);
  std::set<NodeId> seen{start};
  std::deque<std::pair<NodeId, std::size_t>> queue{{start, 0}};
  auto visit = [&](NodeId next, std::size_t depth) {
    if (seen.insert(next).second) queue.emplace_back(next, depth);
  };
  while (!queue.empty()) {
    auto [at, depth] = queue.front();
    queue.pop_front();
    if (depth == max_depth) continue;
    if (auto it = out_.find(at); it != out_.end()) {
      for (RelId r : it->second) {
        if (!rel_type || rels_.at(r).type == *rel_type) visit(rels_.at(r).to, depth + 1);
      }
    }
    if (!either_direction) continue;
    if (auto it = in_.find(at); it != in_.end()) {
      for (RelId r : it->second) {
        if (!rel_type || rels_.at(r).type == *rel_type) visit(rels_.at(r).from, depth + 1);
      }
    }
  }
  if (!include_start) seen.erase(start);
  return seen;
}

std::optional<Path> Graph::shortest_path(NodeId start, NodeId goal, Algorithm algo, const Heuristic& heuristic) const {
  node(start);
  node(goal);
  if (start == goal) return Path{{start}, {}, 0.0, 0};

  const bool use_h = algo == Algorithm::kAStar && static_cast<bool>(heuristic);
  auto h = [&](NodeId n) { return use_h ? heuristic(n) : 0.0; };

  struct Label {
    double f;
    double g;
    std::vector<NodeId> nodes;
    std::vector<RelId> rels;
  };
  struct Worse {
    bool operator()(const Label& a, const Label& b) const {
      if (a.f != b.f) return a.f > b.f;
      return a.nodes > b.nodes;
    }
  };
  std::priority_queue<Label, std::vector<Label>, Worse> open;
  std::map<NodeId, std::pair<double, std::vector<NodeId>>> best;

  best[start] = {0.0, {start}};
  open.push({h(start), 0.0, {start}, {}});
  std::size_t expanded = 0;
  std::optional<Label> found;
  // Keep popping a hair past the first goal hit: a floating-point heuristic
  // can put an equally cheap, lexicographically smaller path just behind it.
  constexpr double kSlack = 1e-9;

  while (!open.empty()) {
    if (found && open.top().f > found->g + kSlack * std::max(1.0, found->g)) break;
    Label cur = open.top();
    open.pop();
    const NodeId at = cur.nodes.back();
    const auto& b = best.at(at);
    if (b.first != cur.g || b.second != cur.nodes) continue;  // superseded
    ++expanded;
    if (at == goal) {
      if (!found || cur.g < found->g || (cur.g == found->g && cur.nodes < found->nodes)) found = cur;
      continue;
    }

    std::vector<RelId> adjacent;
    if (auto it = out_.find(at); it != out_.end()) adjacent.insert(adjacent.end(), it->second.begin(), it->second.end());
    if (auto it = in_.find(at); it != in_.end()) adjacent.insert(adjacent.end(), it->second.begin(), it->second.end());
    std::sort(adjacent.begin(), adjacent.end());
    adjacent.erase(std::unique(adjacent.begin(), adjacent.end()), adjacent.end());

    for (RelId r : adjacent) {
      const Relationship& rel = rels_.at(r);
      const NodeId next = rel.from == at ? rel.to : rel.from;
      if (std::find(cur.nodes.begin(), cur.nodes.end(), next) != cur.nodes.end()) continue;
      const double g = cur.g + rel.length + nodes_.at(next).weight;
      std::vector<NodeId> path = cur.nodes;
      path.push_back(next);
      auto it = best.find(next);
      if (it != best.end() && (it->second.first < g || (it->second.first == g && it->second.second <= path))) continue;
      best[next] = {g, path};
      std::vector<RelId> rels = cur.rels;
      rels.push_back(r);
      open.push({g + h(next), g, std::move(path), std::move(rels)});
    }
  }
  if (!found) return std::nullopt;
  return Path{std::move(found->nodes), std::move(found->rels), found->g, expanded};
}

Heuristic Graph::euclidean_heuristic(NodeId goal) const {
  const GraphNode& g = node(goal);
  double scale = std::numeric_limits<double>::infinity();
  bool all_placed = g.position.has_value();
  for (const auto& [_, n] : nodes_) all_placed = all_placed && n.position.has_value();
  if (all_placed) {
    for (const auto& [_, r] : rels_) {
      const auto& a = *nodes_.at(r.from).position;
      const auto& b = *nodes_.at(r.to).position;
      const double d = std::hypot(a.first - b.first, a.second - b.second);
      if (d > 0) scale = std::min(scale, r.length / d);
    }
  }
  if (!all_placed || !std::isfinite(scale)) scale = 0.0;
  std::map<NodeId, double> h;
  for (const auto& [id, n] : nodes_) {
    h[id] = scale == 0.0 ? 0.0
                         : scale * std::hypot(n.position->first - g.position->first,
                                              n.position->second - g.position->second);
  }
  return [h = std::move(h)](NodeId n) {
    auto it = h.find(n);
    return it == h.end() ? 0.0 : it->second;
  };
}

ProvenanceResult Graph::provenance_query(const PropertyPredicate& first, const std::string& binder,
                                         const PropertyPredicate& second) const {
  if (first.mode == PropertyPredicate::Mode::kBound) {
    throw Error(ErrorCode::kInvalidConfig, "the first query has nothing to bind");
  }
  auto matches = [](const GraphNode& n, const PropertyPredicate& p, const Bytes* bound) {
    auto it = n.properties.find(p.name);
    if (it == n.properties.end()) return false;
    switch (p.mode) {
      case PropertyPredicate::Mode::kAny: return true;
      case PropertyPredicate::Mode::kEquals: return it->second == p.value;
      case PropertyPredicate::Mode::kBound: return bound != nullptr && it->second == *bound;
    }
    return false;
  };

  ProvenanceResult out;
  std::set<NodeId> hits;
  for (const auto& [id, n] : nodes_) {
    if (!matches(n, first, nullptr)) continue;
    out.first.push_back(id);
    auto b = n.properties.find(binder);
    if (b == n.properties.end()) {
      throw Error(ErrorCode::kUnknownProperty, "node " + std::to_string(id) + " has no property " + binder);
    }
    // One or more hops out, so a hit on a cycle can find itself.
    std::set<NodeId> reach;
    std::deque<NodeId> queue;
    auto push_out = [&](NodeId from) {
      if (auto it = out_.find(from); it != out_.end()) {
        for (RelId r : it->second) {
          if (reach.insert(rels_.at(r).to).second) queue.push_back(rels_.at(r).to);
        }
      }
    };
    push_out(id);
    while (!queue.empty()) {
      const NodeId at = queue.front();
      queue.pop_front();
      push_out(at);
    }
    for (NodeId r : reach) {
      if (matches(nodes_.at(r), second, &b->second)) hits.insert(r);
    }
  }
  out.second.assign(hits.begin(), hits.end());
  return out;
}

Graph Graph::parse(std::string_view text) {
  Graph g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) {
      throw Error(ErrorCode::kParseError, "graph line " + std::to_string(no) + ": bad number " + s);
    }
    return v;
  };
  auto id = [&](const std::string& s) {
    std::uint64_t v = 0;
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::kParseError, "graph line " + std::to_string(no) + ": bad id " + s);
    }
    try {
      v = std::stoull(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "graph line " + std::to_string(no) + ": bad id " + s);
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::vector<std::string> f;
    for (std::string w; words >> w;) f.push_back(w);
    if (f.empty()) continue;
    try {
      if (f[0] == "N" && (f.size() == 3 || f.size() == 5)) {
        g.add_node(id(f[1]), number(f[2]));
        if (f.size() == 5) g.set_position(id(f[1]), number(f[3]), number(f[4]));
      } else if (f[0] == "E" && f.size() == 5) {
        g.create_relationship(id(f[1]), id(f[2]), unfield(f[3], no), number(f[4]));
      } else if (f[0] == "P" && f.size() == 5 && (f[1] == "N" || f[1] == "E")) {
        const Element e = f[1] == "N" ? Element::node(id(f[2])) : Element::rel(id(f[2]));
        g.set_property(e, unfield(f[3], no), unfield(f[4], no));
      } else {
        throw Error(ErrorCode::kParseError, "graph line " + std::to_string(no) + " is malformed");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError) throw;
      throw Error(ErrorCode::kParseError, "graph line " + std::to_string(no) + ": " + e.what());
    }
  }
  return g;
}

std::string Graph::to_text() const {
  std::string out;
  for (const auto& [id, n] : nodes_) {
    out += "N " + std::to_string(id) + " " + fmt(n.weight);
    if (n.position) out += " " + fmt(n.position->first) + " " + fmt(n.position->second);
    out += "\n";
  }
  for (const auto& [id, r] : rels_) {
    out += "E " + std::to_string(r.from) + " " + std::to_string(r.to) + " " + field(r.type) + " " + fmt(r.length) + "\n";
  }
  for (const auto& [id, n] : nodes_) {
    for (const auto& [k, v] : n.properties) out += "P N " + std::to_string(id) + " " + field(k) + " " + field(v) + "\n";
  }
  for (const auto& [id, r] : rels_) {
    for (const auto& [k, v] : r.properties) out += "P E " + std::to_string(id) + " " + field(k) + " " + field(v) + "\n";
  }
  return out;
}

}  // namespace robostore::graph
