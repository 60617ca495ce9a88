#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairy/graph.hpp"

namespace fairy {

/// Node similarity in [0, 1]; symmetric, and 1 for a node with itself.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double similarity(NodeIndex a, NodeIndex b) const = 0;
  virtual std::string kind() const = 0;
};

/// Categories standing in for a node: a category is its own association,
/// an item maps to the categories it belongs to, and a user to the
/// categories it follows. Sorted, without duplicates.
std::vector<NodeIndex> associated_categories(const InteractionGraph& g, NodeIndex n);

/// 1 / (1 + d), where d is the shortest undirected distance inside the
/// category taxonomy between the nearest categories of the two nodes.
/// Unreachable or category-less nodes score 0.
class TaxonomicSimilarity final : public SimilarityProvider {
 public:
  explicit TaxonomicSimilarity(const InteractionGraph& g);

  double similarity(NodeIndex a, NodeIndex b) const override;
  std::string kind() const override { return "taxonomic"; }

  std::optional<int> taxonomy_distance(NodeIndex a, NodeIndex b) const;

 private:
  const std::vector<int>& distances_from(NodeIndex category) const;

  const InteractionGraph& g_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<NodeIndex, std::vector<int>> cache_;
};

struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
};

/// Reads `{"id", "vec"}` JSON Lines; all vectors must share one length.
EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// Cosine similarity of embeddings mapped to [0, 1] by (cos + 1) / 2.
///
/// A node without its own vector uses the mean vector of its associated
/// categories. When a vector is still missing the fallback provider decides;
/// without a fallback the similarity is 0 and a warning is logged once.
class EmbeddingSimilarity final : public SimilarityProvider {
 public:
  EmbeddingSimilarity(const InteractionGraph& g, EmbeddingTable table,
                      std::shared_ptr<const SimilarityProvider> fallback = nullptr);

  double similarity(NodeIndex a, NodeIndex b) const override;
  std::string kind() const override { return "embedding"; }

  std::size_t missing_count() const { return missing_.load(); }

 private:
  const std::vector<double>* vector_for(NodeIndex n) const;

  const InteractionGraph& g_;
  EmbeddingTable table_;
  std::shared_ptr<const SimilarityProvider> fallback_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<NodeIndex, std::optional<std::vector<double>>> resolved_;
  mutable std::atomic<std::size_t> missing_{0};
};

/// Maps a cosine value to [0, 1].
double cosine_to_unit(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fairy
