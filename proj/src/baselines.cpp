#include "fairy/baselines.hpp"

#include <algorithm>
#include <cstdio>

#include "fairy/error.hpp"

namespace fairy {

const char* method_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::pra: return "pra";
    case BaselineMethod::rex_global: return "rex_global";
    case BaselineMethod::espresso: return "espresso";
  }
  return "?";
}

std::size_t constrained_degree(const InteractionGraph& g, NodeIndex n, TypeId edge_type,
                               TypeId target_type) {
  std::size_t count = 0;
  for (EdgeIndex e : g.out_edges(n)) {
    const Edge& edge = g.edge(e);
    if (edge.type == edge_type && g.node(edge.target).type == target_type) ++count;
  }
  return count;
}

double pra_score(const InteractionGraph& g, const ExplanationPath& path) {
  if (path.nodes.size() != path.edges.size() + 1 || path.edges.empty()) {
    throw PathError("malformed path");
  }
  double score = 1.0;
  for (std::size_t i = 0; i < path.edges.size(); ++i) {
    if (path.edges[i] >= g.edge_count()) throw PathError("dangling path edge");
    const Edge& e = g.edge(path.edges[i]);
    const auto deg = constrained_degree(g, path.nodes[i], e.type, g.node(path.nodes[i + 1]).type);
    if (deg == 0) throw PathError("path edge does not leave its node");
    score /= static_cast<double>(deg);
  }
  return score;
}

double rex_global_score(const PatternStats& stats, const ExplanationPath& path,
                        const InteractionGraph& g) {
  return 1.0 - stats.confidence(pattern_of(path, g));
}

RandomWalkSimilarity::RandomWalkSimilarity(const InteractionGraph& g, double restart,
                                           int iterations)
    : g_(g), restart_(restart), iterations_(iterations) {}

const std::vector<double>& RandomWalkSimilarity::distribution(NodeIndex source) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(source);
  if (it != cache_.end()) return it->second;
  const std::size_t n = g_.node_count();
  std::vector<double> p(n, 0.0), next(n, 0.0);
  p[source] = 1.0;
  for (int k = 0; k < iterations_; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    next[source] = restart_;
    for (NodeIndex v = 0; v < n; ++v) {
      if (p[v] == 0.0) continue;
      const double mass = (1.0 - restart_) * p[v];
      const auto out = g_.out_edges(v);
      if (out.empty()) {
        next[v] += mass;
        continue;
      }
      double total = 0.0;
      for (EdgeIndex e : out) total += g_.edge(e).weight;
      for (EdgeIndex e : out) {
        const double share = total > 0.0 ? g_.edge(e).weight / total
                                         : 1.0 / static_cast<double>(out.size());
        next[g_.edge(e).target] += mass * share;
      }
    }
    p.swap(next);
  }
  return cache_.emplace(source, std::move(p)).first->second;
}

double RandomWalkSimilarity::directed(NodeIndex from, NodeIndex to) const {
  return distribution(from)[to];
}

double RandomWalkSimilarity::symmetric(NodeIndex a, NodeIndex b) const {
  return 0.5 * (directed(a, b) + directed(b, a));
}

double espresso_score(const InteractionGraph& g, const ExplanationPath& path,
                      const RandomWalkSimilarity& sim, CenterRule rule) {
  const std::size_t k = path.nodes.size();
  if (k < 2) throw PathError("malformed path");
  if (k == 2) return 1.0;
  const NodeIndex u = path.nodes.front();
  const NodeIndex f = path.nodes.back();
  // Internal positions 1..k-2.
  std::vector<double> to_u(k, 0.0), to_f(k, 0.0), to_next(k, 0.0);
  double top = 0.0;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    to_u[i] = sim.symmetric(path.nodes[i], u);
    to_f[i] = sim.symmetric(path.nodes[i], f);
    top = std::max({top, to_u[i], to_f[i]});
    if (i + 2 < k) {
      to_next[i] = sim.symmetric(path.nodes[i], path.nodes[i + 1]);
      top = std::max(top, to_next[i]);
    }
  }
  if (top <= 0.0) return 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    to_u[i] /= top;
    to_f[i] /= top;
    to_next[i] /= top;
  }

  std::size_t center = 1;
  double best = -1.0;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const double v = rule == CenterRule::min ? std::min(to_u[i], to_f[i])
                                             : 0.5 * (to_u[i] + to_f[i]);
    if (v > best || (v == best && g.node(path.nodes[i]).id < g.node(path.nodes[center]).id)) {
      best = v;
      center = i;
    }
  }
  double total = 0.5 * (to_u[center] + to_f[center]);
  for (std::size_t i = 1; i < center; ++i) total += to_next[i];
  for (std::size_t i = center + 1; i + 1 < k; ++i) total += to_next[i - 1];
  return total / static_cast<double>(k - 2);
}

std::vector<BaselineScore> score_baselines(const InteractionGraph& g, const PatternStats& stats,
                                           const std::vector<PairPaths>& pairs,
                                           CenterRule rule) {
  RandomWalkSimilarity rw(g);
  std::vector<BaselineScore> out;
  for (const auto& pp : pairs) {
    for (const auto& p : pp.paths) {
      const std::string id = p.id_hex();
      out.push_back({BaselineMethod::pra, id, pra_score(g, p)});
      out.push_back({BaselineMethod::rex_global, id, rex_global_score(stats, p, g)});
      out.push_back({BaselineMethod::espresso, id, espresso_score(g, p, rw, rule)});
    }
  }
  return out;
}

void write_score_csv(const std::vector<BaselineScore>& scores, std::ostream& out) {
  out << "path_id,method,value\n";
  char buf[32];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.17g", s.value);
    out << s.path_id << ',' << method_name(s.method) << ',' << buf << '\n';
  }
}

}  // namespace fairy
