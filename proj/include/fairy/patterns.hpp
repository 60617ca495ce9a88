#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairy/paths.hpp"

namespace fairy {

/// Node-type / edge-type sequence of a path with the instances erased.
struct PathPattern {
  std::vector<std::string> node_types;
  std::vector<std::string> edge_types;

  /// "user→follows→user→…→post"; doubles as the map key for statistics.
  std::string to_string() const;
  std::uint64_t id() const;

  auto operator<=>(const PathPattern&) const = default;
};

PathPattern pattern_of(const ExplanationPath& path, const InteractionGraph& g);

/// Per-pattern instance counts over a corpus of (user, feed item) pairs.
class PatternStats {
 public:
  /// Average instance count over every pair of the corpus.
  double frequency(const std::string& pattern) const;
  /// Fraction of pairs with at least one instance.
  double confidence(const std::string& pattern) const;
  double frequency(const PathPattern& p) const { return frequency(p.to_string()); }
  double confidence(const PathPattern& p) const { return confidence(p.to_string()); }

  std::size_t total_pairs() const { return total_pairs_; }
  std::size_t pattern_count() const { return support_.size(); }
  /// pair id -> instance count, for one pattern.
  const std::map<std::string, std::size_t>* support(const std::string& pattern) const;
  std::vector<std::string> patterns() const;

  void add_pair(const std::string& pair_id, const std::vector<PathPattern>& patterns);

 private:
  std::map<std::string, std::map<std::string, std::size_t>> support_;
  std::map<std::string, std::size_t> instances_;
  std::map<std::string, bool> pairs_;
  std::size_t total_pairs_ = 0;
};

struct CorpusEntry {
  std::string pair_id;
  std::vector<ExplanationPath> paths;
};

PatternStats build_pattern_stats(const std::vector<CorpusEntry>& corpus,
                                 const InteractionGraph& g);
PatternStats build_pattern_stats(const std::vector<PairPaths>& dump, const InteractionGraph& g);

}  // namespace fairy
