#pragma once

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fairy/graph.hpp"
#include "fairy/ltr.hpp"
#include "fairy/paths.hpp"
#include "fairy/synthetic.hpp"

namespace fairy::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Schema with three node types where every user action on posts and every
/// taxonomy relation is permitted.
Schema toy_schema(bool repeatable_likes = false);

struct RandomGraphSpec {
  std::size_t max_nodes = 30;
  std::size_t max_edges = 60;
  /// Fraction of edges without a timestamp.
  double untimed = 0.25;
  std::int64_t max_time = 20;
};

/// Small random graph over toy_schema(); node "n0" is the focal user.
SyntheticGraph random_graph(std::uint64_t seed, const RandomGraphSpec& spec = {});

/// Node and edge index sequence of a path; compares paths structurally.
using PathShape = std::pair<std::vector<NodeIndex>, std::vector<EdgeIndex>>;

/// Every simple path u -> f of at most `max_len` edges found by exhaustive
/// DFS, then filtered by the viewing time.
std::set<PathShape> oracle_paths(const InteractionGraph& g, NodeIndex u, NodeIndex f,
                                 int max_len, std::int64_t seen_at);

std::set<PathShape> shapes(const std::vector<ExplanationPath>& paths);

/// The path of `g` following the given node ids and edge type names.
ExplanationPath make_path(const InteractionGraph& g, const std::vector<std::string>& nodes,
                          const std::vector<std::string>& edge_types);

/// Layout of `dim` anonymous pattern-group columns.
std::shared_ptr<const FeatureLayout> plain_layout(std::size_t dim);

/// Preference pairs ranked by the planted scorer `w`: Gaussian feature
/// vectors, redrawn until the raw margin |w . (a - b)| is at least 1.
std::vector<PreferencePair> planted_pairs(const std::vector<double>& w, std::size_t count,
                                          std::uint64_t seed, Aspect aspect = Aspect::relevance);

using Preferences = std::vector<std::pair<std::string, std::string>>;

/// Every pair of `ids` judged by its order in the list (earlier is better).
Preferences total_order_judgments(const std::vector<std::string>& ids);

/// Five decidable triplets, exactly one of them a cycle, plus judgments
/// that complete no triplet.
Preferences four_of_five_judgments();

/// Runs a shell command with output discarded and returns its exit status,
/// or -1 when it did not exit normally.
int run_command(const std::string& command);

}  // namespace fairy::testing
