#include "fairy/patterns.hpp"

#include "fairy/error.hpp"

namespace fairy {

namespace {
constexpr std::string_view kArrow = "→";
}

std::string PathPattern::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    out += node_types[i];
    if (i < edge_types.size()) {
      out += kArrow;
      out += edge_types[i];
      out += kArrow;
    }
  }
  return out;
}

std::uint64_t PathPattern::id() const {
  Fnv1a h;
  for (std::size_t i = 0; i < node_types.size(); ++i) {
    h.update(node_types[i]);
    h.separator();
    if (i < edge_types.size()) {
      h.update(edge_types[i]);
      h.separator();
    }
  }
  return h.digest();
}

PathPattern pattern_of(const ExplanationPath& path, const InteractionGraph& g) {
  if (path.nodes.size() != path.edges.size() + 1) {
    throw PathError("malformed path: node/edge counts disagree");
  }
  PathPattern p;
  for (NodeIndex n : path.nodes) {
    if (n >= g.node_count()) throw PathError("path references a node outside the graph");
    p.node_types.push_back(g.type_name_of(n));
  }
  for (EdgeIndex e : path.edges) {
    if (e >= g.edge_count()) throw PathError("path references an edge outside the graph");
    p.edge_types.push_back(g.edge_type_name(g.edge(e).type));
  }
  return p;
}

double PatternStats::frequency(const std::string& pattern) const {
  if (total_pairs_ == 0) return 0.0;
  auto it = instances_.find(pattern);
  if (it == instances_.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(total_pairs_);
}

double PatternStats::confidence(const std::string& pattern) const {
  if (total_pairs_ == 0) return 0.0;
  auto it = support_.find(pattern);
  if (it == support_.end()) return 0.0;
  return static_cast<double>(it->second.size()) / static_cast<double>(total_pairs_);
}

const std::map<std::string, std::size_t>* PatternStats::support(const std::string& pattern) const {
  auto it = support_.find(pattern);
  return it == support_.end() ? nullptr : &it->second;
}

std::vector<std::string> PatternStats::patterns() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : support_) out.push_back(k);
  return out;
}

void PatternStats::add_pair(const std::string& pair_id, const std::vector<PathPattern>& patterns) {
  if (pairs_.emplace(pair_id, true).second) ++total_pairs_;
  for (const auto& p : patterns) {
    const std::string key = p.to_string();
    ++support_[key][pair_id];
    ++instances_[key];
  }
}

PatternStats build_pattern_stats(const std::vector<CorpusEntry>& corpus,
                                 const InteractionGraph& g) {
  if (corpus.empty()) throw PathError("pattern statistics need a nonempty corpus");
  PatternStats stats;
  for (const auto& entry : corpus) {
    std::vector<PathPattern> patterns;
    patterns.reserve(entry.paths.size());
    for (const auto& p : entry.paths) patterns.push_back(pattern_of(p, g));
    stats.add_pair(entry.pair_id, patterns);
  }
  return stats;
}

PatternStats build_pattern_stats(const std::vector<PairPaths>& dump, const InteractionGraph& g) {
  std::vector<CorpusEntry> corpus;
  corpus.reserve(dump.size());
  for (const auto& pp : dump) corpus.push_back(CorpusEntry{pp.pair, pp.paths});
  return build_pattern_stats(corpus, g);
}

}  // namespace fairy
