#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fairy/schema.hpp"

namespace fairy {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;
using TypeId = std::uint16_t;
/// Epoch seconds; empty means the edge has existed since the epoch and
/// compares below every concrete time.
using Timestamp = std::optional<std::int64_t>;

inline constexpr NodeIndex kNoNode = static_cast<NodeIndex>(-1);

struct Node {
  std::string id;
  TypeId type = 0;
  double weight = 0.0;
  std::map<std::string, std::string> attributes;
};

/// Directed edge. Edges are stored in forward/inverse pairs: edge `2k` is an
/// ingested action and `2k + 1` its synthesized inverse, so `e ^ 1` is always
/// the opposite edge. Edge type ids follow the same even/odd convention.
struct Edge {
  NodeIndex source = kNoNode;
  NodeIndex target = kNoNode;
  TypeId type = 0;
  double weight = 0.0;
  Timestamp timestamp;
  /// Caller-supplied distinguishing id; empty for ordinary edges.
  std::string explicit_id;

  bool is_inverse() const { return (type & 1) != 0; }
};

/// Input record for one node (one line of the node file).
struct NodeRecord {
  std::string id;
  std::string type;
  double weight = 0.0;
  std::map<std::string, std::string> attributes;
  bool is_user = false;
};

/// Input record for one forward action (one line of the edge file).
struct EdgeRecord {
  std::string source;
  std::string target;
  std::string type;
  double weight = 1.0;
  Timestamp timestamp;
  std::string explicit_id;
};

/// One user's heterogeneous interaction graph. Immutable once built; safe to
/// share between threads.
class InteractionGraph {
 public:
  const Schema& schema() const { return *schema_; }
  std::shared_ptr<const Schema> schema_ptr() const { return schema_; }

  std::size_t node_count() const { return nodes_.size(); }
  /// Directed edges, inverses included.
  std::size_t edge_count() const { return edges_.size(); }
  NodeIndex user() const { return user_; }
  std::uint64_t revision() const { return revision_; }

  const Node& node(NodeIndex n) const { return nodes_.at(n); }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Edge> edges() const { return edges_; }

  /// Outgoing edges, ordered by (edge type name, target id).
  std::span<const EdgeIndex> out_edges(NodeIndex n) const {
    return {adjacency_.data() + offsets_[n], adjacency_.data() + offsets_[n + 1]};
  }

  std::optional<NodeIndex> find(std::string_view id) const;
  /// Like find() but throws GraphError naming the missing id.
  NodeIndex require(std::string_view id) const;

  const std::string& node_type_name(TypeId t) const { return node_type_names_.at(t); }
  const std::string& edge_type_name(TypeId t) const { return edge_type_names_.at(t); }
  std::size_t node_type_count() const { return node_type_names_.size(); }
  std::size_t edge_type_count() const { return edge_type_names_.size(); }
  std::optional<TypeId> find_node_type(std::string_view name) const;
  /// Accepts both forward and inverse names.
  std::optional<TypeId> find_edge_type(std::string_view name) const;

  const std::string& type_name_of(NodeIndex n) const { return node_type_names_[nodes_[n].type]; }
  bool is_user(NodeIndex n) const { return nodes_[n].type == user_type_; }
  bool is_category(NodeIndex n) const { return category_type_[nodes_[n].type]; }
  bool is_item(NodeIndex n) const { return !is_user(n) && !is_category(n); }

  TypeId follow_type() const { return follow_type_; }
  TypeId taxonomy_type() const { return taxonomy_type_; }
  bool has_follow_type() const { return has_follow_; }
  bool has_taxonomy_type() const { return has_taxonomy_; }

  /// Numeric value of a node attribute, if present and parseable.
  std::optional<double> numeric_attribute(NodeIndex n, const std::string& key) const;

 private:
  friend InteractionGraph build_graph(const Schema&, const std::vector<NodeRecord>&,
                                      const std::vector<EdgeRecord>&, std::uint64_t);

  std::shared_ptr<const Schema> schema_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> offsets_;
  std::vector<EdgeIndex> adjacency_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::string> node_type_names_;
  std::vector<std::string> edge_type_names_;
  std::vector<bool> category_type_;
  TypeId user_type_ = 0;
  TypeId follow_type_ = 0;
  TypeId taxonomy_type_ = 0;
  bool has_follow_ = false;
  bool has_taxonomy_ = false;
  NodeIndex user_ = kNoNode;
  std::uint64_t revision_ = 0;
};

/// Validates records against the schema and builds the graph, synthesizing
/// one inverse edge per forward edge. Repeated records of one action collapse
/// into a single edge (weights add for repeatable actions, timestamp is the
/// earliest instance).
InteractionGraph build_graph(const Schema& schema, const std::vector<NodeRecord>& nodes,
                             const std::vector<EdgeRecord>& edges,
                             std::uint64_t revision = 0);

/// The records that rebuild `g` exactly (forward edges only).
std::vector<NodeRecord> node_records(const InteractionGraph& g);
std::vector<EdgeRecord> edge_records(const InteractionGraph& g);

/// Hop distances from `source` over outgoing edges; -1 when unreachable.
/// Because every edge has an inverse this is the undirected distance.
std::vector<int> bfs_distances(const InteractionGraph& g, NodeIndex source);

/// Induced subgraph of nodes within `radius` hops of `center`, which becomes
/// the focal user of the result.
InteractionGraph ego_subgraph(const InteractionGraph& g, std::string_view center, int radius);

/// Greatest geodesic distance from `n` to any node in its component.
int eccentricity(const InteractionGraph& g, std::string_view n);

/// Outgoing edges of `n`, optionally restricted to one edge type (forward or
/// inverse name) and/or one target node type.
std::size_t degree(const InteractionGraph& g, std::string_view n,
                   std::optional<std::string_view> edge_type = std::nullopt,
                   std::optional<std::string_view> target_type = std::nullopt);

}  // namespace fairy
