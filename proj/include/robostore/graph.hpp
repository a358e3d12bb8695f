#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "robostore/storage.hpp"

namespace robostore::graph {

using NodeId = std::uint64_t;
using RelId = std::uint64_t;
using Properties = std::map<std::string, Bytes>;

struct GraphNode {
  NodeId id = 0;
  Properties properties;
  double weight = 0.0;  // cost of entering the node
  std::optional<std::pair<double, double>> position;
};

struct Relationship {
  RelId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::string type;
  Properties properties;
  double length = 1.0;
};

struct Element {
  enum class Kind { kNode, kRelationship } kind = Kind::kNode;
  std::uint64_t id = 0;

  static Element node(NodeId id) { return {Kind::kNode, id}; }
  static Element rel(RelId id) { return {Kind::kRelationship, id}; }
};

struct Path {
  std::vector<NodeId> nodes;
  std::vector<RelId> rels;
  double cost = 0.0;
  std::size_t expanded = 0;  // labels settled while searching
};

enum class Algorithm { kDijkstra, kAStar };
// Lower bound on the remaining cost from a node to the goal.
using Heuristic = std::function<double(NodeId)>;

struct PropertyPredicate {
  enum class Mode { kEquals, kAny, kBound };
  std::string name;
  Mode mode = Mode::kAny;
  Bytes value;  // for kEquals

  static PropertyPredicate equals(std::string name, Bytes value) { return {std::move(name), Mode::kEquals, std::move(value)}; }
  static PropertyPredicate any(std::string name) { return {std::move(name), Mode::kAny, {}}; }
  // Matches nodes whose `name` equals the value bound from the first query.
  static PropertyPredicate bound(std::string name) { return {std::move(name), Mode::kBound, {}}; }
};

struct ProvenanceResult {
  std::vector<NodeId> first;
  std::vector<NodeId> second;
};

class Graph {
 public:
  NodeId create_node(double weight = 0.0);
  void add_node(NodeId id, double weight = 0.0);
  RelId create_relationship(NodeId from, NodeId to, std::string type, double length = 1.0);
  void set_weight(NodeId node, double weight);
  void set_position(NodeId node, double x, double y);

  void set_property(Element element, const std::string& name, Bytes value);
  std::optional<Bytes> get_property(Element element, const std::string& name) const;

  const GraphNode& node(NodeId id) const;
  const Relationship& relationship(RelId id) const;
  bool has_node(NodeId id) const { return nodes_.contains(id); }
  std::vector<NodeId> node_ids() const;
  std::vector<RelId> relationship_ids() const;

  // Breadth-first over relationships of `rel_type` (any type when empty),
  // following direction unless `either_direction`.
  std::set<NodeId> traverse(NodeId start, const std::optional<std::string>& rel_type, std::size_t max_depth,
                            bool either_direction = false, bool include_start = true) const;

  // Relationships count in both directions. Cost is the sum of relationship
  // lengths plus the weights of every node after the start. Among equal-cost
  // paths the lexicographically smallest node sequence wins.
  std::optional<Path> shortest_path(NodeId start, NodeId goal, Algorithm algo, const Heuristic& heuristic = {}) const;

  // Straight-line distance to `goal` scaled by the smallest length/distance
  // ratio over all relationships, which keeps it a lower bound. Nodes without
  // a position get 0.
  Heuristic euclidean_heuristic(NodeId goal) const;

  // `first` is evaluated over every node. For each hit, its `binder`
  // property is bound into `second`, which is evaluated over nodes reachable
  // from the hit through one or more outgoing relationships.
  ProvenanceResult provenance_query(const PropertyPredicate& first, const std::string& binder,
                                    const PropertyPredicate& second) const;

  // Line format: "N <id> <weight> [<x> <y>]", "E <from> <to> <type> <length>",
  // "P N|E <id> <name> <value>" with %XX escapes in names and values.
  static Graph parse(std::string_view text);
  std::string to_text() const;

 private:
  GraphNode& mutable_node(NodeId id);
  Properties& properties_of(Element element);
  const Properties& properties_of(Element element) const;

  std::map<NodeId, GraphNode> nodes_;
  std::map<RelId, Relationship> rels_;
  std::map<NodeId, std::vector<RelId>> out_;
  std::map<NodeId, std::vector<RelId>> in_;
  NodeId next_node_ = 1;
  RelId next_rel_ = 1;
};

}  // namespace robostore::graph
