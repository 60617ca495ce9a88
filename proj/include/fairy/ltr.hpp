#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairy/features.hpp"
#include "fairy/io.hpp"

namespace fairy {

enum class Aspect { relevance, surprisal };

const char* aspect_name(Aspect a);
std::optional<Aspect> parse_aspect(std::string_view name);

/// A featurized path, identified by its path id.
struct RankItem {
  std::string path_id;
  FeatureVector features;
};

/// One human judgment: `better` was preferred over `worse` for one aspect.
struct PreferencePair {
  std::string pair_id;
  RankItem better;
  RankItem worse;
  Aspect aspect = Aspect::relevance;
  std::string judge;
  std::int64_t judged_at = 0;
};

/// A judgment as stored on disk, referencing paths by id. `pair` optionally
/// names the (user, feed item) pair when a path id occurs in several.
struct Judgment {
  std::string pair_id;
  std::string better;
  std::string worse;
  Aspect aspect = Aspect::relevance;
  std::string judge;
  std::int64_t judged_at = 0;
  std::string pair;
};

Judgment parse_judgment(const Json& j);
Json to_json(const Judgment& j);
std::vector<Judgment> read_judgments(const std::filesystem::path& path);

/// Joins judgments of one aspect with their feature rows; throws
/// FeatureError for judgments naming unknown paths.
std::vector<PreferencePair> attach_features(const std::vector<Judgment>& judgments,
                                            const FeatureTable& table, Aspect aspect);

struct TrainParams {
  double c = 1.0;
  double tolerance = 1e-6;
  int max_epochs = 200;
  std::uint64_t seed = 42;
};

/// Per-feature z-score standardization.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  /// Constant columns get stddev 1.
  static Scaler fit(const std::vector<const std::vector<double>*>& rows);
  std::vector<double> apply(const std::vector<double>& x) const;
};

/// Bias-free linear scorer over standardized features.
struct LinearRankModel {
  Aspect aspect = Aspect::relevance;
  std::shared_ptr<const FeatureLayout> layout;
  std::vector<double> weights;
  Scaler scaler;
  TrainParams params;
  std::string training_digest;
  std::size_t training_pairs = 0;
  /// Objective of the returned weights after each epoch.
  std::vector<double> objective_history;

  /// Per-feature terms w_i * z_i whose sum is the score.
  std::vector<double> contributions(const FeatureVector& x) const;
};

/// Minimizes 1/2 |w|^2 + C * sum max(0, 1 - w.(x_better - x_worse)) with
/// seeded stochastic subgradient steps of size 1/(lambda t).
LinearRankModel train(const std::vector<PreferencePair>& pairs, const TrainParams& params = {});

/// The hinge objective of `weights` on standardized pair differences.
double ranking_objective(const LinearRankModel& model, const std::vector<PreferencePair>& pairs);

double score(const LinearRankModel& model, const FeatureVector& x);

enum class Choice { first, second };

/// Higher score wins; exact ties go to the lexicographically smaller path id.
Choice prefer(double score_a, std::string_view id_a, double score_b, std::string_view id_b);
Choice predict_pair(const LinearRankModel& model, const RankItem& a, const RankItem& b);

double pairwise_accuracy(const LinearRankModel& model, const std::vector<PreferencePair>& pairs);
/// Per-pair correctness (1 when the judged-better path is predicted).
std::vector<double> pairwise_correctness(const LinearRankModel& model,
                                         const std::vector<PreferencePair>& pairs);

struct RankedPath {
  std::string path_id;
  double score = 0.0;
  std::size_t input_index = 0;
};

/// Descending score, ties by path id.
std::vector<RankedPath> rank_paths(const LinearRankModel& model, const std::vector<RankItem>& items);

inline const std::vector<double> kDefaultCGrid{0.01, 0.1, 1.0, 10.0, 100.0};

struct ModelSelection {
  LinearRankModel model;
  double c = 0.0;
  double dev_accuracy = 0.0;
};

/// Trains one model per C and keeps the best on `dev` (ties: smaller C).
/// With an empty dev set the first grid value is used.
ModelSelection train_with_dev(const std::vector<PreferencePair>& train_pairs,
                              const std::vector<PreferencePair>& dev_pairs,
                              const std::vector<double>& c_grid = kDefaultCGrid,
                              TrainParams params = {});

Json to_json(const LinearRankModel& model);
LinearRankModel model_from_json(const Json& j);
void save_model(const LinearRankModel& model, const std::filesystem::path& path);
LinearRankModel load_model(const std::filesystem::path& path);

}  // namespace fairy
