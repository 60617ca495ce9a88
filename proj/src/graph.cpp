#include "fairy/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <tuple>

#include "fairy/error.hpp"

namespace fairy {

std::optional<NodeIndex> InteractionGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex InteractionGraph::require(std::string_view id) const {
  auto n = find(id);
  if (!n) throw GraphError("unknown node '" + std::string(id) + "'");
  return *n;
}

std::optional<TypeId> InteractionGraph::find_node_type(std::string_view name) const {
  for (std::size_t i = 0; i < node_type_names_.size(); ++i) {
    if (node_type_names_[i] == name) return static_cast<TypeId>(i);
  }
  return std::nullopt;
}

std::optional<TypeId> InteractionGraph::find_edge_type(std::string_view name) const {
  for (std::size_t i = 0; i < edge_type_names_.size(); ++i) {
    if (edge_type_names_[i] == name) return static_cast<TypeId>(i);
  }
  return std::nullopt;
}

std::optional<double> InteractionGraph::numeric_attribute(NodeIndex n,
                                                          const std::string& key) const {
  const auto& attrs = nodes_.at(n).attributes;
  auto it = attrs.find(key);
  if (it == attrs.end()) return std::nullopt;
  double value = 0.0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

namespace {

bool earlier(const Timestamp& a, const Timestamp& b) {
  if (!a) return b.has_value();
  return b && *a < *b;
}

void check_weight(double w, const std::string& what) {
  if (!std::isfinite(w) || w < 0.0) {
    throw GraphError(what + ": weight must be a finite non-negative number");
  }
}

}  // namespace

InteractionGraph build_graph(const Schema& schema, const std::vector<NodeRecord>& nodes,
                             const std::vector<EdgeRecord>& edges, std::uint64_t revision) {
  schema.validate();
  InteractionGraph g;
  g.schema_ = std::make_shared<const Schema>(schema);
  g.revision_ = revision;

  std::map<std::string, TypeId> node_type_ids;
  for (const auto& t : schema.node_types) {
    node_type_ids.emplace(t, static_cast<TypeId>(g.node_type_names_.size()));
    g.node_type_names_.push_back(t);
    g.category_type_.push_back(schema.is_category_type(t));
  }
  g.user_type_ = node_type_ids.at(schema.user_type);

  std::map<std::string, TypeId> edge_type_ids;
  for (const auto& t : schema.edge_types) {
    const auto id = static_cast<TypeId>(g.edge_type_names_.size());
    edge_type_ids.emplace(t, id);
    g.edge_type_names_.push_back(t);
    g.edge_type_names_.push_back(invert_type(t));
  }
  if (auto it = edge_type_ids.find(schema.follow_edge); it != edge_type_ids.end()) {
    g.follow_type_ = it->second;
    g.has_follow_ = true;
  }
  if (auto it = edge_type_ids.find(schema.taxonomy_edge); it != edge_type_ids.end()) {
    g.taxonomy_type_ = it->second;
    g.has_taxonomy_ = true;
  }

  g.nodes_.reserve(nodes.size());
  for (const auto& rec : nodes) {
    const std::string what = "node '" + rec.id + "'";
    if (rec.id.empty()) throw GraphError("node with empty id");
    auto t = node_type_ids.find(rec.type);
    if (t == node_type_ids.end()) {
      throw GraphError(what + ": undeclared node type '" + rec.type + "'");
    }
    check_weight(rec.weight, what);
    const auto index = static_cast<NodeIndex>(g.nodes_.size());
    if (!g.index_.emplace(rec.id, index).second) {
      throw GraphError("duplicate node id '" + rec.id + "'");
    }
    if (rec.is_user) {
      if (g.user_ != kNoNode) {
        throw GraphError("multiple focal users: '" + g.nodes_[g.user_].id + "' and '" +
                         rec.id + "'");
      }
      g.user_ = index;
    }
    g.nodes_.push_back(Node{rec.id, t->second, rec.weight, rec.attributes});
  }
  if (g.user_ == kNoNode) throw GraphError("no node is flagged as the focal user");

  using Key = std::tuple<NodeIndex, NodeIndex, TypeId, std::string>;
  std::map<Key, std::size_t> seen;
  std::vector<Edge> forward;
  forward.reserve(edges.size());
  for (const auto& rec : edges) {
    const std::string what = "edge '" + rec.source + "' -" + rec.type + "-> '" + rec.target + "'";
    if (rec.type.find(kInverseMarker) != std::string::npos) {
      throw GraphError(what + ": inverse edge types are synthesized, not ingested");
    }
    auto t = edge_type_ids.find(rec.type);
    if (t == edge_type_ids.end()) {
      throw GraphError(what + ": undeclared edge type '" + rec.type + "'");
    }
    auto src = g.find(rec.source);
    auto dst = g.find(rec.target);
    if (!src) throw GraphError(what + ": unknown source node");
    if (!dst) throw GraphError(what + ": unknown target node");
    if (!schema.permits(g.type_name_of(*src), rec.type, g.type_name_of(*dst))) {
      throw GraphError(what + ": schema does not permit (" + g.type_name_of(*src) + ", " +
                       rec.type + ", " + g.type_name_of(*dst) + ")");
    }
    check_weight(rec.weight, what);
    const bool repeatable = schema.repeatable.contains(rec.type);
    if (!repeatable && rec.weight != 0.0 && rec.weight != 1.0) {
      throw GraphError(what + ": non-repeatable action must have weight 0 or 1");
    }
    Key key{*src, *dst, t->second, rec.explicit_id};
    auto [it, inserted] = seen.emplace(key, forward.size());
    if (inserted) {
      forward.push_back(Edge{*src, *dst, t->second, rec.weight, rec.timestamp, rec.explicit_id});
      continue;
    }
    Edge& e = forward[it->second];
    e.weight = repeatable ? e.weight + rec.weight : std::max(e.weight, rec.weight);
    if (earlier(rec.timestamp, e.timestamp)) e.timestamp = rec.timestamp;
  }

  g.edges_.reserve(forward.size() * 2);
  for (const Edge& e : forward) {
    g.edges_.push_back(e);
    Edge inv = e;
    std::swap(inv.source, inv.target);
    inv.type = static_cast<TypeId>(e.type | 1);
    g.edges_.push_back(std::move(inv));
  }

  const std::size_t n = g.nodes_.size();
  g.offsets_.assign(n + 1, 0);
  for (const Edge& e : g.edges_) ++g.offsets_[e.source + 1];
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adjacency_.resize(g.edges_.size());
  std::vector<std::uint32_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (EdgeIndex e = 0; e < g.edges_.size(); ++e) {
    g.adjacency_[cursor[g.edges_[e].source]++] = e;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.adjacency_.begin() + g.offsets_[i], g.adjacency_.begin() + g.offsets_[i + 1],
              [&](EdgeIndex a, EdgeIndex b) {
                const Edge& ea = g.edges_[a];
                const Edge& eb = g.edges_[b];
                const auto& ta = g.edge_type_names_[ea.type];
                const auto& tb = g.edge_type_names_[eb.type];
                if (ta != tb) return ta < tb;
                const auto& ia = g.nodes_[ea.target].id;
                const auto& ib = g.nodes_[eb.target].id;
                if (ia != ib) return ia < ib;
                return ea.explicit_id < eb.explicit_id;
              });
  }
  return g;
}

std::vector<NodeRecord> node_records(const InteractionGraph& g) {
  std::vector<NodeRecord> out;
  out.reserve(g.node_count());
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const Node& n = g.node(i);
    out.push_back(NodeRecord{n.id, g.node_type_name(n.type), n.weight, n.attributes,
                             i == g.user()});
  }
  return out;
}

std::vector<EdgeRecord> edge_records(const InteractionGraph& g) {
  std::vector<EdgeRecord> out;
  out.reserve(g.edge_count() / 2);
  for (const Edge& e : g.edges()) {
    if (e.is_inverse()) continue;
    out.push_back(EdgeRecord{g.node(e.source).id, g.node(e.target).id,
                             g.edge_type_name(e.type), e.weight, e.timestamp, e.explicit_id});
  }
  return out;
}

std::vector<int> bfs_distances(const InteractionGraph& g, NodeIndex source) {
  std::vector<int> dist(g.node_count(), -1);
  std::deque<NodeIndex> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    for (EdgeIndex e : g.out_edges(v)) {
      const NodeIndex w = g.edge(e).target;
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

InteractionGraph ego_subgraph(const InteractionGraph& g, std::string_view center, int radius) {
  if (radius < 0) throw GraphError("radius must be non-negative");
  const NodeIndex c = g.require(center);
  const auto dist = bfs_distances(g, c);
  std::vector<NodeRecord> nodes;
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    if (dist[i] < 0 || dist[i] > radius) continue;
    const Node& n = g.node(i);
    nodes.push_back(NodeRecord{n.id, g.node_type_name(n.type), n.weight, n.attributes, i == c});
  }
  std::vector<EdgeRecord> edges;
  for (const Edge& e : g.edges()) {
    if (e.is_inverse()) continue;
    const auto ds = dist[e.source];
    const auto dt = dist[e.target];
    if (ds < 0 || ds > radius || dt < 0 || dt > radius) continue;
    edges.push_back(EdgeRecord{g.node(e.source).id, g.node(e.target).id,
                               g.edge_type_name(e.type), e.weight, e.timestamp, e.explicit_id});
  }
  return build_graph(g.schema(), nodes, edges, g.revision() + 1);
}

int eccentricity(const InteractionGraph& g, std::string_view n) {
  const auto dist = bfs_distances(g, g.require(n));
  return std::max(0, *std::max_element(dist.begin(), dist.end()));
}

std::size_t degree(const InteractionGraph& g, std::string_view n,
                   std::optional<std::string_view> edge_type,
                   std::optional<std::string_view> target_type) {
  const NodeIndex v = g.require(n);
  std::optional<TypeId> et;
  std::optional<TypeId> nt;
  if (edge_type) {
    et = g.find_edge_type(*edge_type);
    if (!et) return 0;
  }
  if (target_type) {
    nt = g.find_node_type(*target_type);
    if (!nt) return 0;
  }
  std::size_t count = 0;
  for (EdgeIndex e : g.out_edges(v)) {
    const Edge& edge = g.edge(e);
    if (et && edge.type != *et) continue;
    if (nt && g.node(edge.target).type != *nt) continue;
    ++count;
  }
  return count;
}

}  // namespace fairy
