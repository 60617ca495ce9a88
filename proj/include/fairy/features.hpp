#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairy/patterns.hpp"
#include "fairy/similarity.hpp"

namespace fairy {

enum class FeatureGroup { user, category, item, instance, pattern };

const char* group_name(FeatureGroup g);
std::optional<FeatureGroup> parse_group(std::string_view name);
inline constexpr FeatureGroup kAllGroups[] = {FeatureGroup::user, FeatureGroup::category,
                                              FeatureGroup::item, FeatureGroup::instance,
                                              FeatureGroup::pattern};

struct FeatureConfig {
  /// Category popularity counter: "followers" or "posts".
  std::string popularity_attribute = "followers";
  /// Recency of a path without any timestamped edge.
  double recency_horizon = 2147483648.0;

  // Ablation switches for variants that are not part of the default model.
  bool user_activity_max = false;
  bool node_type_counts = false;
  bool edge_category_counts = false;
};

/// Ordered feature names with the group each column belongs to. Presence
/// flags sit at the end and belong to the group they describe.
struct FeatureLayout {
  std::vector<std::string> names;
  std::vector<FeatureGroup> groups;

  std::size_t size() const { return names.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool operator==(const FeatureLayout& other) const { return names == other.names; }
};

/// Group of a column, derived from its name prefix.
std::optional<FeatureGroup> group_of_feature(std::string_view name);
/// Layout rebuilt from column names; throws FeatureError on unknown names.
FeatureLayout layout_from_names(std::vector<std::string> names);

FeatureLayout make_layout(const Schema& schema, const FeatureConfig& config = {});

/// Layout restricted to the enabled groups, plus the column indices kept.
std::pair<FeatureLayout, std::vector<std::size_t>> mask_layout(
    const FeatureLayout& layout, const std::vector<FeatureGroup>& enabled);

struct FeatureVector {
  std::vector<double> values;
  std::shared_ptr<const FeatureLayout> layout;

  double operator[](std::string_view name) const;
};

struct UserFeatures {
  double link_ratio = 0.0;
  /// One entry per user action type, in layout order.
  std::vector<double> activity;
  bool present = false;
};

struct CategoryFeatures {
  double popularity = 0.0;
  double depth = 0.0;
  double child_count = 0.0;
  bool present = false;
};

struct ItemFeatures {
  double specificity = 0.0;
  double engagement = 0.0;
  bool present = false;
};

struct InstanceFeatures {
  double sim_item = 0.0;
  double sim_user = 0.0;
  double length = 0.0;
  double recency = 0.0;
  std::optional<double> mean_edge_weight;
  bool similarity_present = false;
  bool recency_present = false;
};

struct PatternFeatures {
  double frequency = 0.0;
  double confidence = 0.0;
  std::vector<double> edge_type_counts;
  std::vector<double> node_type_counts;
};

struct SimilarityProviders {
  std::shared_ptr<const SimilarityProvider> item;
  std::shared_ptr<const SimilarityProvider> user;
};

/// Computes the five feature groups for paths of one graph. Node-level
/// counters are precomputed once; all methods are const and thread-safe.
class Featurizer {
 public:
  Featurizer(const InteractionGraph& g, const PatternStats& stats, SimilarityProviders providers,
             FeatureConfig config = {});

  const FeatureLayout& layout() const { return *layout_; }
  std::shared_ptr<const FeatureLayout> layout_ptr() const { return layout_; }

  UserFeatures user_features(const ExplanationPath& path) const;
  CategoryFeatures category_features(const ExplanationPath& path) const;
  ItemFeatures item_features(const ExplanationPath& path) const;
  InstanceFeatures instance_features(const ExplanationPath& path, const FeedItem& item) const;
  PatternFeatures pattern_features(const ExplanationPath& path) const;

  FeatureVector featurize(const ExplanationPath& path, const FeedItem& item) const;

  /// Followers / followees of one user (denominator clamped to 1).
  double link_ratio(NodeIndex user) const;
  /// Hops from the taxonomy root; throws FeatureError for a category with no
  /// path to any root.
  int category_depth(NodeIndex category) const;

 private:
  struct NodeCounters {
    double followers = 0.0;
    double followees = 0.0;
    double children = 0.0;
    double member_items = 0.0;
    double categories = 0.0;
    double distinct_users = 0.0;
  };

  const InteractionGraph& g_;
  const PatternStats& stats_;
  SimilarityProviders providers_;
  FeatureConfig config_;
  std::shared_ptr<const FeatureLayout> layout_;
  std::vector<TypeId> action_types_;
  std::vector<std::string> base_edge_types_;
  std::vector<NodeCounters> counters_;
  /// Per node, outgoing action counts in action_types_ order (users only).
  std::vector<std::vector<double>> activity_;
  std::vector<int> depth_;
};

/// Featurized path of one pair, as stored in a feature dump.
struct FeatureRow {
  std::string path_id;
  std::string pair;
  FeatureVector features;
};

/// CSV with header `path_id,pair,<layout names>`.
void write_feature_csv(const FeatureLayout& layout, const std::vector<FeatureRow>& rows,
                       std::ostream& out);

class FeatureTable {
 public:
  explicit FeatureTable(std::shared_ptr<const FeatureLayout> layout) : layout_(std::move(layout)) {}

  const FeatureLayout& layout() const { return *layout_; }
  std::shared_ptr<const FeatureLayout> layout_ptr() const { return layout_; }
  const std::vector<FeatureRow>& rows() const { return rows_; }

  /// Throws FeatureError when the row's layout differs from the table's.
  void add(FeatureRow row);
  /// First row carrying `path_id` (optionally within `pair`).
  const FeatureRow* find(std::string_view path_id, std::string_view pair = {}) const;

 private:
  std::shared_ptr<const FeatureLayout> layout_;
  std::vector<FeatureRow> rows_;
  std::unordered_multimap<std::string, std::size_t> index_;
};

FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace fairy
