#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fairy/graph.hpp"
#include "fairy/io.hpp"

namespace fairy {

/// An item seen by the user at `seen_at` (epoch seconds).
struct FeedItem {
  std::string node;
  std::int64_t seen_at = 0;
  std::string session;
};

FeedItem parse_feed_item(const Json& j);
Json to_json(const FeedItem& item);
std::vector<FeedItem> read_feed_file(const std::filesystem::path& path);

/// Simple path from the user to a feed item in which every edge predates the
/// moment the item was seen.
struct ExplanationPath {
  std::vector<NodeIndex> nodes;
  std::vector<EdgeIndex> edges;
  /// Stable hash of the (node id, edge type) sequence.
  std::uint64_t id = 0;

  std::size_t length() const { return edges.size(); }
  std::string id_hex() const { return to_hex(id); }
};

std::uint64_t path_id(const InteractionGraph& g, std::span<const NodeIndex> nodes,
                      std::span<const EdgeIndex> edges);

struct MineOptions {
  int max_len = 4;
  /// Enumeration throws TruncationError once this many paths were found.
  std::size_t path_cap = 1'000'000;
};

/// Every simple path user → item.node with at most `max_len` edges whose
/// timestamped edges are all strictly older than `item.seen_at`. Ordered by
/// (length, id).
std::vector<ExplanationPath> enumerate_paths(const InteractionGraph& g, std::string_view user,
                                             const FeedItem& item,
                                             const MineOptions& options = {});

/// True iff every present edge timestamp is strictly below `seen_at`.
bool is_valid(const InteractionGraph& g, const ExplanationPath& path, std::int64_t seen_at);

/// "<user>|<item>|<seen_at>", the key of one (user, feed item) pair.
std::string pair_key(std::string_view user, const FeedItem& item);

/// Canonical ordering used for every path list.
bool path_order(const InteractionGraph& g, const ExplanationPath& a, const ExplanationPath& b);

/// One line of a path dump.
Json path_to_json(const InteractionGraph& g, const std::string& pair, const ExplanationPath& p);
/// Resolves a dumped path against `g`; throws PathError on dangling references.
ExplanationPath path_from_json(const InteractionGraph& g, const Json& j);

/// Paths of one (user, feed item) pair, as stored in a path dump.
struct PairPaths {
  std::string pair;
  FeedItem item;
  std::vector<ExplanationPath> paths;
};

void write_path_dump(const InteractionGraph& g, const std::vector<PairPaths>& pairs,
                     std::ostream& out);
/// Groups dumped paths by pair, preserving file order.
std::vector<PairPaths> read_path_dump(const InteractionGraph& g,
                                      const std::filesystem::path& path);

/// "Alice →follows→ Bob →…" using node ids.
std::string describe(const InteractionGraph& g, const ExplanationPath& p);

/// Inverse of pair_key(); throws PathError on malformed keys.
std::pair<std::string, FeedItem> parse_pair_key(const std::string& key);

}  // namespace fairy
