#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairy/baselines.hpp"
#include "fairy/error.hpp"
#include "fairy/features.hpp"
#include "fairy/ltr.hpp"

namespace fairy {

using IndexPair = std::pair<std::size_t, std::size_t>;

struct PairSample {
  /// Index pairs (first < second) into the sampled path list, sorted.
  std::vector<IndexPair> pairs;
  /// Set when fewer pairs than requested exist.
  bool short_of_request = false;
};

/// `n` distinct unordered pairs drawn uniformly without replacement.
PairSample sample_random_pairs(std::size_t path_count, std::size_t n, std::uint64_t seed);

enum class Sampling { random, perturb_user, perturb_category, perturb_item };

const char* sampling_name(Sampling s);
std::optional<Sampling> parse_sampling(std::string_view name);

/// Node role a perturbation strategy varies.
enum class NodeRole { user, category, item };

/// True when the two paths have equal edge-type sequences and equal nodes
/// everywhere except one position, which holds two nodes of the same type
/// playing `role`.
bool is_perturbation_pair(const InteractionGraph& g, const ExplanationPath& a,
                          const ExplanationPath& b, NodeRole role);

/// Pairs of paths that differ in exactly one node of `node_type`.
PairSample sample_perturbation_pairs(const std::vector<ExplanationPath>& paths,
                                     const InteractionGraph& g, std::string_view node_type,
                                     std::size_t n, std::uint64_t seed);
/// Same, for every node type playing `role`.
PairSample sample_perturbation_pairs(const std::vector<ExplanationPath>& paths,
                                     const InteractionGraph& g, NodeRole role, std::size_t n,
                                     std::uint64_t seed);

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
};

/// Seeded 80/10/10 partition; dev and test sizes are rounded down and the
/// remainder goes to train.
template <typename T>
Split<T> split(const std::vector<T>& items, std::uint64_t seed) {
  if (items.size() < 10) {
    throw ConfigError("need at least 10 pairs to split, got " + std::to_string(items.size()));
  }
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t tenth = items.size() / 10;
  Split<T> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const T& item = items[order[k]];
    if (k < tenth) {
      out.test.push_back(item);
    } else if (k < 2 * tenth) {
      out.dev.push_back(item);
    } else {
      out.train.push_back(item);
    }
  }
  return out;
}

struct TransitivityCounts {
  std::size_t consistent = 0;
  std::size_t decidable = 0;
  double score() const {
    return decidable == 0 ? 0.0 : static_cast<double>(consistent) / static_cast<double>(decidable);
  }
};

/// Judgments are (better, worse) path ids of one judge and aspect. A triplet
/// counts when all three of its pairs are judged; it is consistent unless
/// the judgments form a cycle. Pairs judged both ways equally often count as
/// unjudged.
TransitivityCounts transitivity_counts(
    const std::vector<std::pair<std::string, std::string>>& judgments);
double transitivity_score(const std::vector<std::pair<std::string, std::string>>& judgments);

/// Two-tailed paired t-test on per-pair correctness. With zero variance of
/// the differences: 1 when the means agree, else 0.
double paired_t_test(std::span<const double> a, std::span<const double> b);

struct ExperimentConfig {
  std::string label = "experiment";
  std::uint64_t split_seed = 7;
  Sampling sampling = Sampling::random;
  /// Perturbation applies to test pairs only; training uses every pair.
  bool eval_only = false;
  std::vector<Aspect> aspects{Aspect::relevance, Aspect::surprisal};
  std::vector<FeatureGroup> groups{std::begin(kAllGroups), std::end(kAllGroups)};
  std::vector<double> c_grid = kDefaultCGrid;
  TrainParams train;
  bool per_judge = false;
  CenterRule espresso_center = CenterRule::min;
};

/// Parses one experiment object; rejects unknown groups and empty masks.
ExperimentConfig parse_experiment_config(const Json& j);

struct ExperimentData {
  const InteractionGraph* graph = nullptr;
  std::vector<PairPaths> pairs;
  const FeatureTable* features = nullptr;
  std::vector<Judgment> judgments;
  const PatternStats* stats = nullptr;
};

struct MethodResult {
  std::string method;
  Aspect aspect = Aspect::relevance;
  std::string judge;  ///< empty for the global model
  double accuracy = 0.0;
  std::size_t test_pairs = 0;
  /// FAIRY rows: p-value against the strongest baseline.
  std::optional<double> p_value;
};

struct ExperimentResults {
  std::string label;
  Sampling sampling = Sampling::random;
  std::vector<std::string> groups;
  std::vector<MethodResult> rows;
  std::map<Aspect, TransitivityCounts> transitivity;
  /// Fraction of surprisal judgments between paths of different lengths in
  /// which the more surprising path is the shorter one.
  std::optional<double> surprising_shorter;
};

ExperimentResults run_experiment(const ExperimentConfig& config, const ExperimentData& data);

inline constexpr const char* kFairy = "fairy";
inline constexpr double kSignificance = 0.05;

/// CSV: label,sampling,groups,aspect,method,judge,accuracy,test_pairs,p_value.
void write_results_csv(const std::vector<ExperimentResults>& results, std::ostream& out);
/// Text tables in the layout of the comparison, ablation and sampling
/// tables: one row per aspect, one column per method.
std::string format_results(const std::vector<ExperimentResults>& results);

}  // namespace fairy
