#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairy/graph.hpp"
#include "fairy/ltr.hpp"
#include "fairy/paths.hpp"

namespace fairy {

/// Schemas of the two platforms the engine was designed around.
Schema quora_schema();
Schema lastfm_schema();
/// Schema of the toy graph below (posts instead of questions and answers).
Schema fig1_schema();

/// Input records of one interaction graph plus the focal user's feed.
struct SyntheticGraph {
  Schema schema;
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  std::string user;
  std::vector<FeedItem> feed;

  InteractionGraph build() const { return build_graph(schema, nodes, edges); }
};

/// Writes schema.json, nodes.jsonl, edges.jsonl and feed.jsonl into `dir`.
void write_synthetic(const SyntheticGraph& g, const std::filesystem::path& dir);

/// The toy Quora graph of user Alice: the bomb post is seen at 13, and the
/// upvote of the health post by Charlie happens at 14.
SyntheticGraph fig1_fixture();

struct GeneratorParams {
  Schema schema;
  std::size_t users = 100;
  std::size_t categories = 20;
  std::size_t items = 300;
  /// Children per category in the taxonomy tree.
  std::size_t branching = 4;
  double follows_per_user = 3.0;
  double category_follows_per_user = 1.0;
  double actions_per_user = 4.0;
  /// Extra categories per item beyond the first.
  double extra_categories_per_item = 0.3;
  /// Multiplier for the focal user's own activity.
  double focal_activity = 5.0;
  /// Popularity skew; 1 is uniform, larger concentrates activity.
  double skew = 1.5;
  std::int64_t time_span = 1'000'000;
  std::size_t feed_items = 5;
  std::uint64_t seed = 1;
};

/// Random social graph around user "u0" following `params`. Action times lie
/// in [1, time_span]; feed items are seen in the last fifth of that span, so
/// some paths are cut by the temporal constraint.
SyntheticGraph generate_graph(const GeneratorParams& params);

/// Parameters sized like the Last.fm and Quora graphs of the user study.
GeneratorParams lastfm_scale_params(std::uint64_t seed = 1);
GeneratorParams quora_scale_params(std::uint64_t seed = 1);
/// Small Quora-like graph for the bundled end-to-end dataset.
GeneratorParams bundled_params(std::uint64_t seed = 1);

/// Simulated judge: prefers the path with the larger hidden utility after
/// adding Gaussian noise of standard deviation `noise`.
struct SimulatedJudge {
  std::string name;
  double noise = 0.0;
};

/// Utility the simulated judges rank by. Relevance favors common patterns
/// and content close to the feed item; surprisal favors rare patterns.
double hidden_utility(const FeatureVector& x, Aspect aspect);

/// One judgment per (pair, judge); the pair id is "<first>~<second>" of the
/// two path ids in the order given.
std::vector<Judgment> simulate_judgments(const std::vector<std::pair<FeatureRow, FeatureRow>>& pairs,
                                         Aspect aspect, const std::vector<SimulatedJudge>& judges,
                                         std::uint64_t seed, std::int64_t judged_at = 0);

}  // namespace fairy
