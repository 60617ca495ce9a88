#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairy/patterns.hpp"

namespace fairy {

enum class BaselineMethod { pra, rex_global, espresso };

const char* method_name(BaselineMethod m);
inline constexpr BaselineMethod kBaselines[] = {BaselineMethod::pra, BaselineMethod::rex_global,
                                                BaselineMethod::espresso};

struct BaselineScore {
  BaselineMethod method = BaselineMethod::pra;
  std::string path_id;
  double value = 0.0;
};

/// Edges leaving `n` with edge type `edge_type` into nodes of `target_type`.
std::size_t constrained_degree(const InteractionGraph& g, NodeIndex n, TypeId edge_type,
                               TypeId target_type);

/// Probability that a walker constrained to the path's pattern follows this
/// exact path: the product of reciprocal constrained out-degrees.
double pra_score(const InteractionGraph& g, const ExplanationPath& path);

/// Rarity of the path's pattern: 1 - confidence.
double rex_global_score(const PatternStats& stats, const ExplanationPath& path,
                        const InteractionGraph& g);

/// Truncated random walk with restart over the weighted adjacency (inverse
/// edges included). Walk distributions are memoized per source node.
class RandomWalkSimilarity {
 public:
  explicit RandomWalkSimilarity(const InteractionGraph& g, double restart = 0.15,
                                int iterations = 10);

  /// Walk mass at `to` for a walk restarting at `from`.
  double directed(NodeIndex from, NodeIndex to) const;
  /// Mean of both directions.
  double symmetric(NodeIndex a, NodeIndex b) const;

 private:
  const std::vector<double>& distribution(NodeIndex source) const;

  const InteractionGraph& g_;
  double restart_;
  int iterations_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<NodeIndex, std::vector<double>> cache_;
};

enum class CenterRule { min, mean };

/// Relatedness-core style score of a path: pick the internal node most
/// similar to both endpoints as center, grow outward along the path scoring
/// each node by its similarity to the already-selected neighbor, and average.
/// Similarities are normalized by the largest one used for the path.
double espresso_score(const InteractionGraph& g, const ExplanationPath& path,
                      const RandomWalkSimilarity& sim, CenterRule rule = CenterRule::min);

/// All three baseline scores for every path of a dump; written as CSV
/// `path_id,method,value`.
std::vector<BaselineScore> score_baselines(const InteractionGraph& g, const PatternStats& stats,
                                           const std::vector<PairPaths>& pairs,
                                           CenterRule rule = CenterRule::min);
void write_score_csv(const std::vector<BaselineScore>& scores, std::ostream& out);

}  // namespace fairy
