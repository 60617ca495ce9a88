#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fairy/features.hpp"
#include "fairy/io.hpp"
#include "fairy/ltr.hpp"
#include "fairy/paths.hpp"
#include "fairy/patterns.hpp"

namespace httplib {
class Server;
}

namespace fairy {

/// Settings stored in a workspace's config.json.
struct WorkspaceConfig {
  std::uint64_t seed = 1;
  /// Path pairs queued for judgment per feed item.
  std::size_t pairs_per_item = 25;
  std::uint64_t split_seed = 7;
  std::vector<double> c_grid = kDefaultCGrid;
};

WorkspaceConfig parse_workspace_config(const Json& j);
Json to_json(const WorkspaceConfig& c);

/// Standard file names inside a workspace directory.
struct WorkspaceLayout {
  std::filesystem::path root;

  std::filesystem::path graph() const { return root / "graph"; }
  std::filesystem::path feed() const { return root / "feed.jsonl"; }
  std::filesystem::path paths() const { return root / "paths.jsonl"; }
  std::filesystem::path features() const { return root / "features.csv"; }
  std::filesystem::path judgments() const { return root / "judgments.jsonl"; }
  std::filesystem::path models() const { return root / "models"; }
  std::filesystem::path model(Aspect a) const {
    return models() / (std::string(aspect_name(a)) + ".json");
  }
  std::filesystem::path config() const { return root / "config.json"; }
};

/// Copies pipeline outputs into a fresh workspace directory.
void create_workspace(const std::filesystem::path& root,
                      const std::filesystem::path& graph_snapshot,
                      const std::filesystem::path& feed_file,
                      const std::filesystem::path& path_dump,
                      const std::filesystem::path& feature_csv,
                      const WorkspaceConfig& config = {});

struct Response {
  int status = 200;
  Json body;
};

/// One path pair offered for judgment.
struct QueuedPair {
  std::string pair_id;
  std::string pair;
  std::size_t first = 0;   ///< index into the pair's path list
  std::size_t second = 0;
};

/// Request handlers over one loaded workspace. Handlers are safe to call
/// concurrently; judgment appends are serialized and a retrain swaps the
/// active model in one step.
class Service {
 public:
  explicit Service(std::filesystem::path root);
  ~Service();

  Response feed_items() const;
  Response pairs(std::optional<std::string> aspect, std::optional<std::string> n,
                 const std::string& judge) const;
  Response post_judgment(const std::string& content_type, const std::string& body);
  Response train(std::optional<std::string> aspect);
  Response rank(const std::string& user, const std::string& item,
                std::optional<std::string> aspect, std::optional<std::string> k) const;
  Response stats() const;

  /// Registers every endpoint on `server`.
  void mount(httplib::Server& server);

  const InteractionGraph& graph() const { return *graph_; }
  /// Judgment queue of the workspace, in serving order.
  const std::vector<QueuedPair>& queue() const { return queue_; }

 private:
  using JudgmentKey = std::tuple<std::string, std::string, Aspect>;

  Json render_path(const PairPaths& pp, std::size_t index) const;
  const PairPaths* find_pair(const std::string& pair) const;
  bool known_path(const std::string& id, const std::string& pair) const;
  std::shared_ptr<const LinearRankModel> active_model(Aspect a) const;

  WorkspaceLayout layout_;
  WorkspaceConfig config_;
  std::unique_ptr<InteractionGraph> graph_;
  std::vector<FeedItem> feed_;
  std::vector<PairPaths> dump_;
  std::unique_ptr<FeatureTable> features_;
  std::map<std::string, std::size_t> pair_index_;
  std::set<std::pair<std::string, std::string>> path_ids_;  ///< (pair, id)
  std::vector<QueuedPair> queue_;

  mutable std::mutex judgments_mutex_;
  std::vector<Judgment> judgments_;
  std::set<JudgmentKey> judgment_keys_;

  mutable std::mutex model_mutex_;
  std::map<Aspect, std::shared_ptr<const LinearRankModel>> models_;
  std::atomic<bool> training_{false};
};

}  // namespace fairy
