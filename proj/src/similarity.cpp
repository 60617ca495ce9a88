#include "fairy/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <spdlog/spdlog.h>

#include "fairy/error.hpp"
#include "fairy/io.hpp"

namespace fairy {

std::vector<NodeIndex> associated_categories(const InteractionGraph& g, NodeIndex n) {
  if (g.is_category(n)) return {n};
  std::vector<NodeIndex> out;
  const bool user = g.is_user(n);
  if (user && !g.has_follow_type()) return out;
  if (!user && !g.has_taxonomy_type()) return out;
  const TypeId via = user ? g.follow_type() : g.taxonomy_type();
  for (EdgeIndex e : g.out_edges(n)) {
    const Edge& edge = g.edge(e);
    if (edge.type == via && g.is_category(edge.target)) out.push_back(edge.target);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TaxonomicSimilarity::TaxonomicSimilarity(const InteractionGraph& g) : g_(g) {}

const std::vector<int>& TaxonomicSimilarity::distances_from(NodeIndex category) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(category);
  if (it != cache_.end()) return it->second;
  std::vector<int> dist(g_.node_count(), -1);
  dist[category] = 0;
  std::deque<NodeIndex> queue{category};
  const TypeId forward = g_.taxonomy_type();
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    for (EdgeIndex e : g_.out_edges(v)) {
      const Edge& edge = g_.edge(e);
      if ((edge.type & ~TypeId{1}) != forward || !g_.is_category(edge.target)) continue;
      if (dist[edge.target] >= 0) continue;
      dist[edge.target] = dist[v] + 1;
      queue.push_back(edge.target);
    }
  }
  return cache_.emplace(category, std::move(dist)).first->second;
}

std::optional<int> TaxonomicSimilarity::taxonomy_distance(NodeIndex a, NodeIndex b) const {
  if (a == b) return 0;
  if (!g_.has_taxonomy_type()) return std::nullopt;
  const auto ca = associated_categories(g_, a);
  const auto cb = associated_categories(g_, b);
  std::optional<int> best;
  for (NodeIndex x : ca) {
    const auto& dist = distances_from(x);
    for (NodeIndex y : cb) {
      if (dist[y] >= 0 && (!best || dist[y] < *best)) best = dist[y];
    }
  }
  return best;
}

double TaxonomicSimilarity::similarity(NodeIndex a, NodeIndex b) const {
  const auto d = taxonomy_distance(a, b);
  return d ? 1.0 / (1.0 + *d) : 0.0;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  EmbeddingTable table;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    try {
      auto id = j.at("id").get<std::string>();
      auto vec = j.at("vec").get<std::vector<double>>();
      if (table.vectors.empty()) table.dim = vec.size();
      if (vec.size() != table.dim || vec.empty()) {
        throw FeatureError("embedding for '" + id + "' has length " +
                           std::to_string(vec.size()) + ", expected " +
                           std::to_string(table.dim));
      }
      table.vectors[id] = std::move(vec);
    } catch (const Json::exception& e) {
      throw FeatureError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return table;
}

double cosine_to_unit(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double cos = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return (cos + 1.0) / 2.0;
}

EmbeddingSimilarity::EmbeddingSimilarity(const InteractionGraph& g, EmbeddingTable table,
                                         std::shared_ptr<const SimilarityProvider> fallback)
    : g_(g), table_(std::move(table)), fallback_(std::move(fallback)) {}

const std::vector<double>* EmbeddingSimilarity::vector_for(NodeIndex n) const {
  std::lock_guard lock(mutex_);
  auto it = resolved_.find(n);
  if (it == resolved_.end()) {
    auto usable = [](const std::vector<double>& v) {
      return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
    };
    std::optional<std::vector<double>> v;
    if (auto own = table_.vectors.find(g_.node(n).id);
        own != table_.vectors.end() && usable(own->second)) {
      v = own->second;
    } else {
      std::vector<double> sum(table_.dim, 0.0);
      std::size_t count = 0;
      for (NodeIndex c : associated_categories(g_, n)) {
        auto cv = table_.vectors.find(g_.node(c).id);
        if (cv == table_.vectors.end()) continue;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += cv->second[i];
        ++count;
      }
      if (count > 0) {
        for (double& x : sum) x /= static_cast<double>(count);
        if (usable(sum)) v = std::move(sum);
      }
    }
    it = resolved_.emplace(n, std::move(v)).first;
  }
  return it->second ? &*it->second : nullptr;
}

double EmbeddingSimilarity::similarity(NodeIndex a, NodeIndex b) const {
  if (a == b) return 1.0;
  const auto* va = vector_for(a);
  const auto* vb = vector_for(b);
  if (va && vb) return cosine_to_unit(*va, *vb);
  if (fallback_) return fallback_->similarity(a, b);
  if (missing_.fetch_add(1) == 0) {
    spdlog::warn("no embedding for '{}' or '{}' and no fallback; similarity set to 0",
                 g_.node(a).id, g_.node(b).id);
  }
  return 0.0;
}

}  // namespace fairy
