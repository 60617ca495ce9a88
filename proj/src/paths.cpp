#include "fairy/paths.hpp"

#include <algorithm>
#include <deque>

#include "fairy/error.hpp"

namespace fairy {

FeedItem parse_feed_item(const Json& j) {
  try {
    FeedItem f;
    f.node = j.at("item").get<std::string>();
    f.seen_at = j.at("seen_at").get<std::int64_t>();
    f.session = j.value("session", std::string());
    return f;
  } catch (const Json::exception& e) {
    throw PathError(std::string("malformed feed record: ") + e.what());
  }
}

Json to_json(const FeedItem& item) {
  return Json{{"item", item.node}, {"seen_at", item.seen_at}, {"session", item.session}};
}

std::vector<FeedItem> read_feed_file(const std::filesystem::path& path) {
  std::vector<FeedItem> out;
  for_each_json_line(path, [&](const Json& j, std::size_t) { out.push_back(parse_feed_item(j)); });
  return out;
}

std::uint64_t path_id(const InteractionGraph& g, std::span<const NodeIndex> nodes,
                      std::span<const EdgeIndex> edges) {
  Fnv1a h;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    h.update(g.node(nodes[i]).id);
    h.separator();
    if (i < edges.size()) {
      h.update(g.edge_type_name(g.edge(edges[i]).type));
      h.separator();
    }
  }
  return h.digest();
}

std::string pair_key(std::string_view user, const FeedItem& item) {
  return std::string(user) + "|" + item.node + "|" + std::to_string(item.seen_at);
}

std::pair<std::string, FeedItem> parse_pair_key(const std::string& key) {
  const auto first = key.find('|');
  const auto last = key.rfind('|');
  if (first == std::string::npos || first == last) {
    throw PathError("malformed pair key '" + key + "'");
  }
  FeedItem item;
  item.node = key.substr(first + 1, last - first - 1);
  try {
    item.seen_at = std::stoll(key.substr(last + 1));
  } catch (const std::exception&) {
    throw PathError("malformed pair key '" + key + "'");
  }
  return {key.substr(0, first), item};
}

bool path_order(const InteractionGraph& g, const ExplanationPath& a, const ExplanationPath& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  if (a.id != b.id) return a.id < b.id;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    if (a.nodes[i] != b.nodes[i]) return g.node(a.nodes[i]).id < g.node(b.nodes[i]).id;
  }
  return a.edges < b.edges;
}

namespace {

/// Depth-first enumeration with two prunings that do not change the result:
/// edges at or after the viewing time are never followed, and a node is only
/// expanded when the target is still reachable within the remaining budget.
class PathMiner {
 public:
  PathMiner(const InteractionGraph& g, NodeIndex source, NodeIndex target,
            std::int64_t seen_at, const MineOptions& options)
      : g_(g), target_(target), seen_at_(seen_at), options_(options),
        on_path_(g.node_count(), false) {
    remaining_ = distances_to_target();
    nodes_.push_back(source);
    on_path_[source] = true;
  }

  std::vector<ExplanationPath> run() {
    if (nodes_.front() != target_) extend(nodes_.front());
    std::sort(out_.begin(), out_.end(),
              [&](const auto& a, const auto& b) { return path_order(g_, a, b); });
    return std::move(out_);
  }

 private:
  bool usable(const Edge& e) const { return !e.timestamp || *e.timestamp < seen_at_; }

  std::vector<int> distances_to_target() const {
    std::vector<int> dist(g_.node_count(), -1);
    std::deque<NodeIndex> queue{target_};
    dist[target_] = 0;
    while (!queue.empty()) {
      const NodeIndex v = queue.front();
      queue.pop_front();
      if (dist[v] >= options_.max_len) continue;
      // Inverse closure makes usable reverse edges the mirror of forward ones.
      for (EdgeIndex e : g_.out_edges(v)) {
        const Edge& edge = g_.edge(e);
        if (!usable(edge) || dist[edge.target] >= 0) continue;
        dist[edge.target] = dist[v] + 1;
        queue.push_back(edge.target);
      }
    }
    return dist;
  }

  void extend(NodeIndex v) {
    const int depth = static_cast<int>(edges_.size());
    for (EdgeIndex e : g_.out_edges(v)) {
      const Edge& edge = g_.edge(e);
      const NodeIndex w = edge.target;
      if (on_path_[w] || !usable(edge)) continue;
      if (w == target_) {
        emit(e);
        continue;
      }
      const int left = options_.max_len - depth - 1;
      if (remaining_[w] < 0 || remaining_[w] > left) continue;
      nodes_.push_back(w);
      edges_.push_back(e);
      on_path_[w] = true;
      extend(w);
      on_path_[w] = false;
      edges_.pop_back();
      nodes_.pop_back();
    }
  }

  void emit(EdgeIndex last) {
    if (out_.size() >= options_.path_cap) {
      throw TruncationError("path cap of " + std::to_string(options_.path_cap) +
                            " reached; raise the cap or lower max_len");
    }
    ExplanationPath p;
    p.nodes = nodes_;
    p.nodes.push_back(target_);
    p.edges = edges_;
    p.edges.push_back(last);
    p.id = path_id(g_, p.nodes, p.edges);
    out_.push_back(std::move(p));
  }

  const InteractionGraph& g_;
  NodeIndex target_;
  std::int64_t seen_at_;
  MineOptions options_;
  std::vector<int> remaining_;
  std::vector<bool> on_path_;
  std::vector<NodeIndex> nodes_;
  std::vector<EdgeIndex> edges_;
  std::vector<ExplanationPath> out_;
};

}  // namespace

std::vector<ExplanationPath> enumerate_paths(const InteractionGraph& g, std::string_view user,
                                             const FeedItem& item, const MineOptions& options) {
  if (options.max_len < 1) throw PathError("max_len must be at least 1");
  const NodeIndex u = g.require(user);
  const NodeIndex f = g.require(item.node);
  return PathMiner(g, u, f, item.seen_at, options).run();
}

std::string describe(const InteractionGraph& g, const ExplanationPath& p) {
  std::string out;
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    out += g.node(p.nodes[i]).id;
    if (i < p.edges.size()) out += " →" + g.edge_type_name(g.edge(p.edges[i]).type) + "→ ";
  }
  return out;
}

bool is_valid(const InteractionGraph& g, const ExplanationPath& path, std::int64_t seen_at) {
  return std::all_of(path.edges.begin(), path.edges.end(), [&](EdgeIndex e) {
    const auto& ts = g.edge(e).timestamp;
    return !ts || *ts < seen_at;
  });
}

Json path_to_json(const InteractionGraph& g, const std::string& pair, const ExplanationPath& p) {
  Json nodes = Json::array();
  Json types = Json::array();
  Json stamps = Json::array();
  for (NodeIndex n : p.nodes) nodes.push_back(g.node(n).id);
  for (EdgeIndex e : p.edges) {
    const Edge& edge = g.edge(e);
    types.push_back(g.edge_type_name(edge.type));
    stamps.push_back(edge.timestamp ? Json(*edge.timestamp) : Json(nullptr));
  }
  return Json{{"pair", pair},         {"nodes", nodes}, {"edge_types", types},
              {"timestamps", stamps}, {"id", p.id_hex()}};
}

ExplanationPath path_from_json(const InteractionGraph& g, const Json& j) {
  ExplanationPath p;
  try {
    const auto& nodes = j.at("nodes");
    const auto& types = j.at("edge_types");
    const Json stamps = j.value("timestamps", Json::array());
    if (nodes.size() != types.size() + 1 || types.empty()) {
      throw PathError("path must have one more node than edges");
    }
    for (const auto& n : nodes) {
      auto idx = g.find(n.get<std::string>());
      if (!idx) throw PathError("path references unknown node '" + n.get<std::string>() + "'");
      p.nodes.push_back(*idx);
    }
    for (std::size_t i = 0; i < types.size(); ++i) {
      const auto type = g.find_edge_type(types[i].get<std::string>());
      if (!type) throw PathError("path references unknown edge type " + types[i].dump());
      Timestamp wanted;
      if (i < stamps.size() && !stamps[i].is_null()) wanted = stamps[i].get<std::int64_t>();
      std::optional<EdgeIndex> match;
      for (EdgeIndex e : g.out_edges(p.nodes[i])) {
        const Edge& edge = g.edge(e);
        if (edge.target != p.nodes[i + 1] || edge.type != *type) continue;
        if (!match || edge.timestamp == wanted) match = e;
        if (edge.timestamp == wanted) break;
      }
      if (!match) {
        throw PathError("path edge " + g.node(p.nodes[i]).id + " -" + types[i].get<std::string>() +
                        "-> " + g.node(p.nodes[i + 1]).id + " does not exist");
      }
      p.edges.push_back(*match);
    }
  } catch (const Json::exception& e) {
    throw PathError(std::string("malformed path record: ") + e.what());
  }
  p.id = path_id(g, p.nodes, p.edges);
  if (j.contains("id") && from_hex(j.at("id").get<std::string>()) != p.id) {
    throw PathError("path id " + j.at("id").get<std::string>() + " does not match its content");
  }
  return p;
}

void write_path_dump(const InteractionGraph& g, const std::vector<PairPaths>& pairs,
                     std::ostream& out) {
  for (const auto& pp : pairs) {
    for (const auto& p : pp.paths) out << path_to_json(g, pp.pair, p).dump() << '\n';
  }
}

std::vector<PairPaths> read_path_dump(const InteractionGraph& g,
                                      const std::filesystem::path& path) {
  std::vector<PairPaths> out;
  std::map<std::string, std::size_t> index;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    try {
      const std::string pair = j.at("pair").get<std::string>();
      auto [it, inserted] = index.emplace(pair, out.size());
      if (inserted) out.push_back(PairPaths{pair, parse_pair_key(pair).second, {}});
      out[it->second].paths.push_back(path_from_json(g, j));
    } catch (const Json::exception& e) {
      throw PathError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    } catch (const PathError& e) {
      throw PathError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace fairy
