#include "fairy/service.hpp"

#include <chrono>
#include <fstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "fairy/error.hpp"
#include "fairy/eval.hpp"
#include "fairy/graph_io.hpp"

namespace fairy {

namespace fs = std::filesystem;

WorkspaceConfig parse_workspace_config(const Json& j) {
  WorkspaceConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.pairs_per_item = j.value("pairs_per_item", c.pairs_per_item);
    c.split_seed = j.value("split_seed", c.split_seed);
    if (j.contains("c_grid")) c.c_grid = j.at("c_grid").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed workspace config: ") + e.what());
  }
  if (c.c_grid.empty()) throw ConfigError("workspace config has an empty c_grid");
  return c;
}

Json to_json(const WorkspaceConfig& c) {
  return Json{{"seed", c.seed},
              {"pairs_per_item", c.pairs_per_item},
              {"split_seed", c.split_seed},
              {"c_grid", c.c_grid}};
}

void create_workspace(const fs::path& root, const fs::path& graph_snapshot,
                      const fs::path& feed_file, const fs::path& path_dump,
                      const fs::path& feature_csv, const WorkspaceConfig& config) {
  const WorkspaceLayout l{root};
  try {
    fs::create_directories(l.graph());
    fs::create_directories(l.models());
    for (const char* name : {"schema.json", "nodes.jsonl", "edges.jsonl"}) {
      fs::copy_file(graph_snapshot / name, l.graph() / name, fs::copy_options::overwrite_existing);
    }
    fs::copy_file(feed_file, l.feed(), fs::copy_options::overwrite_existing);
    fs::copy_file(path_dump, l.paths(), fs::copy_options::overwrite_existing);
    fs::copy_file(feature_csv, l.features(), fs::copy_options::overwrite_existing);
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
  AtomicFile out(l.config());
  out.stream() << to_json(config).dump(2) << '\n';
  out.commit();
}

namespace {

Response error(int status, const std::string& message) {
  return Response{status, Json{{"error", message}}};
}

std::optional<long> parse_count(const std::optional<std::string>& text, long fallback) {
  if (!text || text->empty()) return fallback;
  try {
    std::size_t used = 0;
    const long v = std::stol(*text, &used);
    if (used != text->size() || v < 1) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& key) {
  Fnv1a h;
  h.update_u64(seed);
  h.separator();
  h.update(key);
  return h.digest();
}

}  // namespace

Service::Service(fs::path root) : layout_{std::move(root)} {
  if (fs::exists(layout_.config())) config_ = parse_workspace_config(read_json_file(layout_.config()));
  graph_ = std::make_unique<InteractionGraph>(load_snapshot(layout_.graph()));
  if (fs::exists(layout_.feed())) feed_ = read_feed_file(layout_.feed());
  dump_ = read_path_dump(*graph_, layout_.paths());
  features_ = std::make_unique<FeatureTable>(read_feature_csv(layout_.features()));

  for (std::size_t i = 0; i < dump_.size(); ++i) {
    pair_index_[dump_[i].pair] = i;
    for (const auto& p : dump_[i].paths) path_ids_.emplace(dump_[i].pair, p.id_hex());
  }
  for (const auto& pp : dump_) {
    if (pp.paths.size() < 2) continue;
    const auto sample =
        sample_random_pairs(pp.paths.size(), config_.pairs_per_item, mix_seed(config_.seed, pp.pair));
    for (const auto& [a, b] : sample.pairs) {
      if (pp.paths[a].id == pp.paths[b].id) continue;
      queue_.push_back(QueuedPair{pp.paths[a].id_hex() + "~" + pp.paths[b].id_hex(), pp.pair, a, b});
    }
  }

  if (fs::exists(layout_.judgments())) {
    for (auto& j : read_judgments(layout_.judgments())) {
      if (!known_path(j.better, j.pair) || !known_path(j.worse, j.pair)) {
        throw IoError("judgment " + j.pair_id + " references a path missing from the dump");
      }
      judgment_keys_.emplace(j.pair_id, j.judge, j.aspect);
      judgments_.push_back(std::move(j));
    }
  }
  for (Aspect a : {Aspect::relevance, Aspect::surprisal}) {
    if (fs::exists(layout_.model(a))) {
      models_[a] = std::make_shared<const LinearRankModel>(load_model(layout_.model(a)));
    }
  }
}

Service::~Service() = default;

bool Service::known_path(const std::string& id, const std::string& pair) const {
  if (!pair.empty()) return path_ids_.contains({pair, id});
  for (const auto& pp : dump_) {
    if (path_ids_.contains({pp.pair, id})) return true;
  }
  return false;
}

const PairPaths* Service::find_pair(const std::string& pair) const {
  auto it = pair_index_.find(pair);
  return it == pair_index_.end() ? nullptr : &dump_[it->second];
}

std::shared_ptr<const LinearRankModel> Service::active_model(Aspect a) const {
  std::lock_guard lock(model_mutex_);
  auto it = models_.find(a);
  return it == models_.end() ? nullptr : it->second;
}

Json Service::render_path(const PairPaths& pp, std::size_t index) const {
  const ExplanationPath& p = pp.paths[index];
  Json nodes = Json::array();
  for (NodeIndex n : p.nodes) {
    const Node& node = graph_->node(n);
    auto label = node.attributes.find("label");
    nodes.push_back({{"id", node.id},
                     {"label", label == node.attributes.end() ? node.id : label->second},
                     {"type", graph_->node_type_name(node.type)}});
  }
  Json edges = Json::array();
  for (EdgeIndex e : p.edges) edges.push_back(graph_->edge_type_name(graph_->edge(e).type));
  return Json{{"id", p.id_hex()}, {"length", p.length()}, {"nodes", nodes}, {"edge_types", edges}};
}

Response Service::feed_items() const {
  Json items = Json::array();
  for (const auto& f : feed_) items.push_back(to_json(f));
  return Response{200, Json{{"user", graph_->node(graph_->user()).id}, {"items", items}}};
}

Response Service::pairs(std::optional<std::string> aspect_text, std::optional<std::string> n_text,
                        const std::string& judge) const {
  if (!aspect_text) return error(400, "missing 'aspect' parameter");
  const auto aspect = parse_aspect(*aspect_text);
  if (!aspect) return error(400, "unknown aspect '" + *aspect_text + "'");
  const auto n = parse_count(n_text, 10);
  if (!n) return error(400, "'n' must be a positive integer");

  Json out = Json::array();
  std::size_t remaining = 0;
  {
    std::lock_guard lock(judgments_mutex_);
    for (const auto& q : queue_) {
      if (judgment_keys_.contains({q.pair_id, judge, *aspect})) continue;
      ++remaining;
      if (out.size() >= static_cast<std::size_t>(*n)) continue;
      const PairPaths& pp = *find_pair(q.pair);
      out.push_back(Json{{"pair_id", q.pair_id},
                         {"pair", q.pair},
                         {"item", pp.item.node},
                         {"first", render_path(pp, q.first)},
                         {"second", render_path(pp, q.second)}});
    }
  }
  return Response{200, Json{{"aspect", aspect_name(*aspect)},
                            {"judge", judge},
                            {"remaining", remaining},
                            {"pairs", out}}};
}

Response Service::post_judgment(const std::string& content_type, const std::string& body) {
  if (content_type.rfind("application/json", 0) != 0) {
    return error(415, "request body must be application/json");
  }
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::exception& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) return error(400, "judgment must be a JSON object");
  Judgment j;
  try {
    j = parse_judgment(doc);
  } catch (const ModelError& e) {
    return error(400, e.what());
  }
  if (!doc.contains("judged_at")) j.judged_at = now_seconds();
  if (!j.pair.empty() && !find_pair(j.pair)) return error(400, "unknown pair '" + j.pair + "'");
  for (const auto* id : {&j.better, &j.worse}) {
    if (!known_path(*id, j.pair)) return error(400, "unknown path id '" + *id + "'");
  }

  std::lock_guard lock(judgments_mutex_);
  const JudgmentKey key{j.pair_id, j.judge, j.aspect};
  if (judgment_keys_.contains(key)) {
    return error(409, "pair " + j.pair_id + " was already judged by '" + j.judge + "' for " +
                          aspect_name(j.aspect));
  }
  {
    std::ofstream out(layout_.judgments(), std::ios::app | std::ios::binary);
    out << to_json(j).dump() << '\n';
    out.flush();
    if (!out) return error(500, "could not append to the judgment store");
  }
  judgment_keys_.insert(key);
  judgments_.push_back(j);
  return Response{201, Json{{"stored", to_json(j)}}};
}

Response Service::train(std::optional<std::string> aspect_text) {
  if (!aspect_text) return error(400, "missing 'aspect' parameter");
  const auto aspect = parse_aspect(*aspect_text);
  if (!aspect) return error(400, "unknown aspect '" + *aspect_text + "'");
  if (training_.exchange(true)) return error(503, "a retrain is already running");
  struct Reset {
    std::atomic<bool>& flag;
    ~Reset() { flag = false; }
  } reset{training_};

  std::vector<Judgment> snapshot;
  {
    std::lock_guard lock(judgments_mutex_);
    snapshot = judgments_;
  }
  try {
    const auto prefs = attach_features(snapshot, *features_, *aspect);
    const auto parts = split(prefs, config_.split_seed);
    auto selection = train_with_dev(parts.train, parts.dev, config_.c_grid);
    const double test_accuracy = pairwise_accuracy(selection.model, parts.test);
    save_model(selection.model, layout_.model(*aspect));
    auto model = std::make_shared<const LinearRankModel>(std::move(selection.model));
    {
      std::lock_guard lock(model_mutex_);
      models_[*aspect] = model;
    }
    spdlog::info("retrained {} model on {} pairs (dev accuracy {:.4f})", aspect_name(*aspect),
                 parts.train.size(), selection.dev_accuracy);
    return Response{200, Json{{"aspect", aspect_name(*aspect)},
                              {"c", selection.c},
                              {"dev_accuracy", selection.dev_accuracy},
                              {"test_accuracy", test_accuracy},
                              {"training_pairs", parts.train.size()},
                              {"dev_pairs", parts.dev.size()},
                              {"test_pairs", parts.test.size()}}};
  } catch (const ConfigError& e) {
    return error(400, e.what());
  } catch (const ModelError& e) {
    return error(400, e.what());
  }
}

Response Service::rank(const std::string& user, const std::string& item,
                       std::optional<std::string> aspect_text,
                       std::optional<std::string> k_text) const {
  const auto aspect = parse_aspect(aspect_text.value_or("relevance"));
  if (!aspect) return error(400, "unknown aspect '" + *aspect_text + "'");
  const auto k = parse_count(k_text, 5);
  if (!k) return error(400, "'k' must be a positive integer");
  const std::string& owner = graph_->node(graph_->user()).id;
  if (!user.empty() && user != owner) return error(404, "unknown user '" + user + "'");
  if (!graph_->find(item)) return error(404, "unknown item '" + item + "'");

  const PairPaths* pp = nullptr;
  for (const auto& candidate : dump_) {
    if (candidate.item.node == item && (!pp || candidate.item.seen_at > pp->item.seen_at)) {
      pp = &candidate;
    }
  }
  if (!pp) return error(404, "no explanation paths were mined for item '" + item + "'");
  const auto model = active_model(*aspect);
  if (!model) return error(409, std::string("no trained model for ") + aspect_name(*aspect));

  std::vector<RankItem> items;
  items.reserve(pp->paths.size());
  for (const auto& p : pp->paths) {
    const FeatureRow* row = features_->find(p.id_hex(), pp->pair);
    if (!row) return error(500, "path " + p.id_hex() + " has no feature row");
    items.push_back(RankItem{row->path_id, row->features});
  }
  const auto ranked = rank_paths(*model, items);
  Json out = Json::array();
  for (std::size_t r = 0; r < ranked.size() && r < static_cast<std::size_t>(*k); ++r) {
    const auto& entry = ranked[r];
    Json contributions = Json::object();
    const auto terms = model->contributions(items[entry.input_index].features);
    for (std::size_t f = 0; f < terms.size(); ++f) contributions[model->layout->names[f]] = terms[f];
    Json path = render_path(*pp, entry.input_index);
    path["rank"] = r + 1;
    path["score"] = entry.score;
    path["contributions"] = std::move(contributions);
    out.push_back(std::move(path));
  }
  return Response{200, Json{{"user", owner},
                            {"item", item},
                            {"pair", pp->pair},
                            {"aspect", aspect_name(*aspect)},
                            {"k", *k},
                            {"paths", out}}};
}

Response Service::stats() const {
  std::size_t path_count = 0;
  for (const auto& pp : dump_) path_count += pp.paths.size();
  Json counts = Json::object();
  Json transitivity = Json::object();
  std::set<std::string> judges;
  std::size_t total = 0;
  {
    std::lock_guard lock(judgments_mutex_);
    total = judgments_.size();
    for (Aspect a : {Aspect::relevance, Aspect::surprisal}) {
      std::map<std::string, std::vector<std::pair<std::string, std::string>>> per_judge;
      std::size_t n = 0;
      for (const auto& j : judgments_) {
        judges.insert(j.judge);
        if (j.aspect != a) continue;
        ++n;
        per_judge[j.judge].emplace_back(j.better, j.worse);
      }
      TransitivityCounts sum;
      for (const auto& [judge, js] : per_judge) {
        const auto c = transitivity_counts(js);
        sum.consistent += c.consistent;
        sum.decidable += c.decidable;
      }
      counts[aspect_name(a)] = n;
      transitivity[aspect_name(a)] =
          sum.decidable ? Json(sum.score()) : Json(nullptr);
      transitivity[std::string(aspect_name(a)) + "_triplets"] = sum.decidable;
    }
  }
  counts["total"] = total;
  counts["judges"] = judges.size();
  Json models = Json::object();
  for (Aspect a : {Aspect::relevance, Aspect::surprisal}) {
    models[aspect_name(a)] = active_model(a) != nullptr;
  }
  return Response{200, Json{{"graph",
                             {{"user", graph_->node(graph_->user()).id},
                              {"nodes", graph_->node_count()},
                              {"edges", graph_->edge_count()},
                              {"revision", graph_->revision()}}},
                            {"feed_items", feed_.size()},
                            {"pairs", dump_.size()},
                            {"paths", path_count},
                            {"queued_pairs", queue_.size()},
                            {"judgments", counts},
                            {"transitivity", transitivity},
                            {"models", models}}};
}

namespace {

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

void Service::mount(httplib::Server& server) {
  server.Get("/feed-items", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, feed_items());
  });
  server.Get("/pairs", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, pairs(param(req, "aspect"), param(req, "n"), param(req, "judge").value_or("")));
  });
  server.Post("/judgments", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_judgment(req.get_header_value("Content-Type"), req.body));
  });
  server.Post("/train", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, train(param(req, "aspect")));
  });
  server.Get("/rank", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, rank(param(req, "user").value_or(""), param(req, "item").value_or(""),
                    param(req, "aspect"), param(req, "k")));
  });
  server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, stats());
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        spdlog::error("request failed: {}", message);
        reply(res, error(500, message));
      });
}

}  // namespace fairy
