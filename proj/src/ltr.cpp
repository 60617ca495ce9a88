#include "fairy/ltr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "fairy/error.hpp"

namespace fairy {

const char* aspect_name(Aspect a) {
  return a == Aspect::relevance ? "relevance" : "surprisal";
}

std::optional<Aspect> parse_aspect(std::string_view name) {
  if (name == "relevance") return Aspect::relevance;
  if (name == "surprisal") return Aspect::surprisal;
  return std::nullopt;
}

Judgment parse_judgment(const Json& j) {
  try {
    Judgment out;
    out.pair_id = j.at("pair_id").get<std::string>();
    out.better = j.at("better").get<std::string>();
    out.worse = j.at("worse").get<std::string>();
    const auto aspect = parse_aspect(j.at("aspect").get<std::string>());
    if (!aspect) throw ModelError("unknown aspect " + j.at("aspect").dump());
    out.aspect = *aspect;
    out.judge = j.value("judge", std::string());
    out.judged_at = j.value("judged_at", std::int64_t{0});
    out.pair = j.value("pair", std::string());
    if (out.better == out.worse) throw ModelError("judgment compares a path with itself");
    return out;
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed judgment: ") + e.what());
  }
}

Json to_json(const Judgment& j) {
  Json out{{"pair_id", j.pair_id}, {"better", j.better},  {"worse", j.worse},
           {"aspect", aspect_name(j.aspect)}, {"judge", j.judge}, {"judged_at", j.judged_at}};
  if (!j.pair.empty()) out["pair"] = j.pair;
  return out;
}

std::vector<Judgment> read_judgments(const std::filesystem::path& path) {
  std::vector<Judgment> out;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    try {
      out.push_back(parse_judgment(j));
    } catch (const ModelError& e) {
      throw ModelError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

std::vector<PreferencePair> attach_features(const std::vector<Judgment>& judgments,
                                            const FeatureTable& table, Aspect aspect) {
  std::vector<PreferencePair> out;
  for (const auto& j : judgments) {
    if (j.aspect != aspect) continue;
    const FeatureRow* better = table.find(j.better, j.pair);
    const FeatureRow* worse = table.find(j.worse, j.pair);
    if (!better) throw FeatureError("judgment " + j.pair_id + " names unknown path " + j.better);
    if (!worse) throw FeatureError("judgment " + j.pair_id + " names unknown path " + j.worse);
    out.push_back(PreferencePair{j.pair_id, RankItem{j.better, better->features},
                                 RankItem{j.worse, worse->features}, j.aspect, j.judge,
                                 j.judged_at});
  }
  return out;
}

Scaler Scaler::fit(const std::vector<const std::vector<double>*>& rows) {
  Scaler s;
  if (rows.empty()) return s;
  const std::size_t d = rows.front()->size();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += (*r)[i];
  }
  for (double& m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = (*r)[i] - s.mean[i];
      s.stddev[i] += diff * diff;
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

std::vector<double> Scaler::apply(const std::vector<double>& x) const {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / stddev[i];
  return z;
}

namespace {

void check_layout(const LinearRankModel& model, const FeatureVector& x) {
  if (x.values.size() != model.weights.size() ||
      (x.layout && model.layout && *x.layout != *model.layout)) {
    throw ModelError("feature layout does not match the model layout");
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::vector<double>> differences(const Scaler& scaler,
                                             const std::vector<PreferencePair>& pairs) {
  std::vector<std::vector<double>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto zb = scaler.apply(p.better.features.values);
    const auto zw = scaler.apply(p.worse.features.values);
    for (std::size_t i = 0; i < zb.size(); ++i) zb[i] -= zw[i];
    out.push_back(std::move(zb));
  }
  return out;
}

double objective(const std::vector<double>& w, const std::vector<std::vector<double>>& diffs,
                 double c) {
  double hinge = 0.0;
  for (const auto& d : diffs) hinge += std::max(0.0, 1.0 - dot(w, d));
  return 0.5 * dot(w, w) + c * hinge;
}

std::string digest_pairs(const std::vector<PreferencePair>& pairs) {
  Fnv1a h;
  for (const auto& p : pairs) {
    h.update(p.pair_id);
    h.separator();
    for (const auto* item : {&p.better, &p.worse}) {
      h.update(item->path_id);
      h.separator();
      for (double v : item->features.values) h.update_u64(std::bit_cast<std::uint64_t>(v));
    }
  }
  return to_hex(h.digest());
}

}  // namespace

LinearRankModel train(const std::vector<PreferencePair>& pairs, const TrainParams& params) {
  if (pairs.empty()) throw ModelError("cannot train on an empty set of pairs");
  if (!(params.c > 0.0)) throw ModelError("C must be positive");
  const Aspect aspect = pairs.front().aspect;
  const auto layout = pairs.front().better.features.layout;
  const std::size_t dim = pairs.front().better.features.values.size();
  std::vector<const std::vector<double>*> rows;
  for (const auto& p : pairs) {
    if (p.aspect != aspect) throw ModelError("training pairs mix relevance and surprisal");
    for (const auto* item : {&p.better, &p.worse}) {
      const auto& f = item->features;
      if (f.values.size() != dim || (layout && f.layout && *f.layout != *layout)) {
        throw ModelError("training pairs mix feature layouts");
      }
      rows.push_back(&f.values);
    }
  }

  LinearRankModel model;
  model.aspect = aspect;
  model.layout = layout;
  model.params = params;
  model.scaler = Scaler::fit(rows);
  model.training_digest = digest_pairs(pairs);
  model.training_pairs = pairs.size();

  const auto diffs = differences(model.scaler, pairs);
  const double m = static_cast<double>(diffs.size());
  const double lambda = 1.0 / (params.c * m);
  const double radius = 1.0 / std::sqrt(lambda);

  std::vector<double> w(dim, 0.0);
  std::vector<double> best = w;
  double best_objective = objective(w, diffs, params.c);
  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed);
  std::uint64_t t = 0;
  int stalled = 0;
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double margin = dot(w, diffs[i]);
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      for (double& x : w) x *= shrink;
      if (margin < 1.0) {
        for (std::size_t k = 0; k < dim; ++k) w[k] += eta * diffs[i][k];
      }
      const double norm = std::sqrt(dot(w, w));
      if (norm > radius) {
        for (double& x : w) x *= radius / norm;
      }
    }
    const double current = objective(w, diffs, params.c);
    const double previous = best_objective;
    if (current < best_objective) {
      best_objective = current;
      best = w;
    }
    model.objective_history.push_back(best_objective);
    const double gain = (previous - best_objective) / std::max(previous, 1e-12);
    stalled = gain < params.tolerance ? stalled + 1 : 0;
    if (stalled >= 5) break;
  }
  model.weights = std::move(best);
  return model;
}

double ranking_objective(const LinearRankModel& model, const std::vector<PreferencePair>& pairs) {
  return objective(model.weights, differences(model.scaler, pairs), model.params.c);
}

std::vector<double> LinearRankModel::contributions(const FeatureVector& x) const {
  check_layout(*this, x);
  auto z = scaler.apply(x.values);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] *= weights[i];
  return z;
}

double score(const LinearRankModel& model, const FeatureVector& x) {
  check_layout(model, x);
  return dot(model.weights, model.scaler.apply(x.values));
}

Choice prefer(double score_a, std::string_view id_a, double score_b, std::string_view id_b) {
  if (score_a > score_b) return Choice::first;
  if (score_b > score_a) return Choice::second;
  return id_b < id_a ? Choice::second : Choice::first;
}

Choice predict_pair(const LinearRankModel& model, const RankItem& a, const RankItem& b) {
  return prefer(score(model, a.features), a.path_id, score(model, b.features), b.path_id);
}

std::vector<double> pairwise_correctness(const LinearRankModel& model,
                                         const std::vector<PreferencePair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(predict_pair(model, p.better, p.worse) == Choice::first ? 1.0 : 0.0);
  }
  return out;
}

double pairwise_accuracy(const LinearRankModel& model, const std::vector<PreferencePair>& pairs) {
  if (pairs.empty()) throw ModelError("accuracy of an empty pair set is undefined");
  const auto c = pairwise_correctness(model, pairs);
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

std::vector<RankedPath> rank_paths(const LinearRankModel& model,
                                   const std::vector<RankItem>& items) {
  std::vector<RankedPath> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back(RankedPath{items[i].path_id, score(model, items[i].features), i});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedPath& a, const RankedPath& b) {
    return prefer(a.score, a.path_id, b.score, b.path_id) == Choice::first &&
           !(a.score == b.score && a.path_id == b.path_id);
  });
  return out;
}

ModelSelection train_with_dev(const std::vector<PreferencePair>& train_pairs,
                              const std::vector<PreferencePair>& dev_pairs,
                              const std::vector<double>& c_grid, TrainParams params) {
  if (c_grid.empty()) throw ModelError("empty C grid");
  std::optional<ModelSelection> best;
  for (double c : c_grid) {
    params.c = c;
    auto model = train(train_pairs, params);
    const double acc = dev_pairs.empty() ? 0.0 : pairwise_accuracy(model, dev_pairs);
    if (!best || acc > best->dev_accuracy || (acc == best->dev_accuracy && c < best->c)) best = ModelSelection{std::move(model), c, acc};
    if (dev_pairs.empty()) break;
  }
  return std::move(*best);
}

Json to_json(const LinearRankModel& model) {
  return Json{{"format", "fairy-linear-rank-model/1"},
              {"aspect", aspect_name(model.aspect)},
              {"layout", model.layout ? model.layout->names : std::vector<std::string>{}},
              {"weights", model.weights},
              {"scaler", {{"mean", model.scaler.mean}, {"stddev", model.scaler.stddev}}},
              {"hyper",
               {{"C", model.params.c},
                {"tolerance", model.params.tolerance},
                {"max_epochs", model.params.max_epochs},
                {"seed", model.params.seed}}},
              {"training_digest", model.training_digest},
              {"training_pairs", model.training_pairs},
              {"objective", model.objective_history}};
}

LinearRankModel model_from_json(const Json& j) {
  try {
    LinearRankModel m;
    const auto aspect = parse_aspect(j.at("aspect").get<std::string>());
    if (!aspect) throw ModelError("model has unknown aspect");
    m.aspect = *aspect;
    m.layout = std::make_shared<const FeatureLayout>(
        layout_from_names(j.at("layout").get<std::vector<std::string>>()));
    m.weights = j.at("weights").get<std::vector<double>>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.stddev = j.at("scaler").at("stddev").get<std::vector<double>>();
    const auto& h = j.at("hyper");
    m.params.c = h.at("C").get<double>();
    m.params.tolerance = h.at("tolerance").get<double>();
    m.params.max_epochs = h.at("max_epochs").get<int>();
    m.params.seed = h.at("seed").get<std::uint64_t>();
    m.training_digest = j.value("training_digest", std::string());
    m.training_pairs = j.value("training_pairs", std::size_t{0});
    m.objective_history = j.value("objective", std::vector<double>{});
    const std::size_t d = m.layout->size();
    if (m.weights.size() != d || m.scaler.mean.size() != d || m.scaler.stddev.size() != d) {
      throw ModelError("model vectors do not match the layout length");
    }
    for (double s : m.scaler.stddev) {
      if (!(s > 0.0)) throw ModelError("model scaler has a non-positive stddev");
    }
    return m;
  } catch (const Json::exception& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  } catch (const FeatureError& e) {
    throw ModelError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const LinearRankModel& model, const std::filesystem::path& path) {
  AtomicFile out(path);
  out.stream() << to_json(model).dump(2) << '\n';
  out.commit();
}

LinearRankModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ModelError("no trained model at " + path.string());
  return model_from_json(read_json_file(path));
}

}  // namespace fairy
