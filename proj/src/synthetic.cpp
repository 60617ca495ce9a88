#include "fairy/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fairy/error.hpp"
#include "fairy/graph_io.hpp"

namespace fairy {

Schema quora_schema() {
  Schema s;
  s.platform = "quora";
  s.node_types = {"user", "question", "answer", "category"};
  s.edge_types = {"follows", "asks", "answers", "upvotes", "belongs-to"};
  s.triples = {
      {"user", "follows", "user"},          {"user", "follows", "category"},
      {"user", "follows", "question"},      {"user", "asks", "question"},
      {"user", "upvotes", "answer"},        {"answer", "answers", "question"},
      {"question", "belongs-to", "category"}, {"category", "belongs-to", "category"},
  };
  s.validate();
  return s;
}

Schema lastfm_schema() {
  Schema s;
  s.platform = "lastfm";
  s.node_types = {"user", "track", "album", "artist", "tag"};
  s.edge_types = {"follows", "scrobbles", "loves", "sings", "contains", "belongs-to"};
  s.triples = {
      {"user", "follows", "user"},     {"user", "scrobbles", "track"},
      {"user", "loves", "track"},      {"artist", "sings", "track"},
      {"album", "contains", "track"},  {"track", "belongs-to", "tag"},
      {"album", "belongs-to", "tag"},  {"artist", "belongs-to", "tag"},
      {"tag", "belongs-to", "tag"},
  };
  s.repeatable = {"scrobbles"};
  s.category_types = {"tag"};
  s.validate();
  return s;
}

Schema fig1_schema() {
  Schema s;
  s.platform = "quora-toy";
  s.node_types = {"user", "category", "post"};
  s.edge_types = {"follows", "asks", "posts", "upvotes", "belongs-to"};
  s.triples = {
      {"user", "follows", "user"},      {"user", "follows", "category"},
      {"user", "asks", "post"},         {"user", "posts", "post"},
      {"user", "upvotes", "post"},      {"post", "belongs-to", "category"},
      {"category", "belongs-to", "category"},
  };
  s.validate();
  return s;
}

void write_synthetic(const SyntheticGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  AtomicFile schema(dir / "schema.json");
  schema.stream() << to_json(g.schema).dump(2) << '\n';
  AtomicFile nodes(dir / "nodes.jsonl");
  for (const auto& n : g.nodes) nodes.stream() << to_json(n).dump() << '\n';
  AtomicFile edges(dir / "edges.jsonl");
  for (const auto& e : g.edges) edges.stream() << to_json(e).dump() << '\n';
  AtomicFile feed(dir / "feed.jsonl");
  for (const auto& f : g.feed) feed.stream() << to_json(f).dump() << '\n';
  schema.commit();
  nodes.commit();
  edges.commit();
  feed.commit();
}

SyntheticGraph fig1_fixture() {
  SyntheticGraph g;
  g.schema = fig1_schema();
  g.user = "Alice";
  auto node = [&](std::string id, std::string type, double weight) {
    NodeRecord r;
    r.id = id;
    r.type = std::move(type);
    r.weight = weight;
    r.attributes["label"] = id;
    r.is_user = id == "Alice";
    g.nodes.push_back(std::move(r));
  };
  node("Alice", "user", 1);
  node("Bob", "user", 1);
  node("Charlie", "user", 1);
  node("Sam", "user", 1);
  node("Health", "category", 1);
  node("Chemistry", "category", 1);
  node("Food", "category", 1);
  node("Organics", "category", 1);
  node("Science", "category", 1);
  node("health-post", "post", 30);
  node("food-post", "post", 12);
  node("bomb-post", "post", 3);
  auto edge = [&](std::string src, std::string type, std::string dst, Timestamp ts) {
    EdgeRecord r;
    r.source = std::move(src);
    r.target = std::move(dst);
    r.type = std::move(type);
    r.timestamp = ts;
    g.edges.push_back(std::move(r));
  };
  edge("Alice", "follows", "Bob", 1);
  edge("Alice", "follows", "Health", 2);
  edge("Alice", "asks", "food-post", 3);
  edge("Sam", "posts", "health-post", 4);
  edge("Bob", "follows", "Charlie", 5);
  edge("Charlie", "follows", "Sam", 6);
  edge("Charlie", "follows", "Chemistry", 7);
  edge("Sam", "asks", "bomb-post", 10);
  edge("Charlie", "upvotes", "health-post", 14);
  edge("health-post", "belongs-to", "Health", std::nullopt);
  edge("food-post", "belongs-to", "Food", std::nullopt);
  edge("Food", "belongs-to", "Organics", std::nullopt);
  edge("Health", "belongs-to", "Science", std::nullopt);
  edge("Chemistry", "belongs-to", "Science", std::nullopt);
  edge("bomb-post", "belongs-to", "Chemistry", std::nullopt);
  edge("bomb-post", "belongs-to", "Organics", std::nullopt);
  g.feed.push_back(FeedItem{"bomb-post", 13, "fig1"});
  return g;
}

namespace {

class Generator {
 public:
  explicit Generator(const GeneratorParams& p) : p_(p), rng_(p.seed) {}

  SyntheticGraph run() {
    const Schema& s = p_.schema;
    out_.schema = s;
    out_.user = "u0";
    category_type_ = *s.category_types.begin();
    for (const auto& t : s.node_types) {
      if (s.is_item_type(t)) item_types_.push_back(t);
    }
    if (item_types_.empty()) throw ConfigError("schema has no content item types");

    make_categories();
    make_users();
    make_items();
    make_content_links();
    make_social();
    make_actions();
    make_feed();
    return std::move(out_);
  }

 private:
  std::size_t skewed(std::size_t n) {
    // Index in [0, n) with density concentrated at small values.
    const double x = std::pow(unit_(rng_), p_.skew);
    return std::min(n - 1, static_cast<std::size_t>(x * static_cast<double>(n)));
  }

  std::size_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::size_t>(mean)(rng_);
  }

  void add_node(const std::string& id, const std::string& type, double weight) {
    NodeRecord r;
    r.id = id;
    r.type = type;
    r.weight = weight;
    r.attributes["label"] = id;
    r.is_user = id == out_.user;
    out_.nodes.push_back(std::move(r));
  }

  void add_edge(const std::string& src, const std::string& type, const std::string& dst,
                Timestamp ts, double weight = 1.0) {
    if (src == dst) return;
    const auto key = src + '\x1f' + type + '\x1f' + dst;
    if (!seen_edges_.insert(key).second) return;
    EdgeRecord r;
    r.source = src;
    r.target = dst;
    r.type = type;
    r.timestamp = ts;
    r.weight = weight;
    out_.edges.push_back(std::move(r));
  }

  std::int64_t random_time() {
    return std::uniform_int_distribution<std::int64_t>(1, p_.time_span)(rng_);
  }

  void make_categories() {
    const Schema& s = p_.schema;
    const bool taxonomy = s.permits(category_type_, s.taxonomy_edge, category_type_);
    for (std::size_t c = 0; c < std::max<std::size_t>(p_.categories, 1); ++c) {
      categories_.push_back("c" + std::to_string(c));
      add_node(categories_.back(), category_type_, 1.0);
      if (taxonomy && c > 0) {
        const std::size_t parent = (c - 1) / std::max<std::size_t>(p_.branching, 1);
        add_edge(categories_.back(), s.taxonomy_edge, categories_[parent], std::nullopt);
      }
    }
  }

  void make_users() {
    for (std::size_t u = 0; u < std::max<std::size_t>(p_.users, 1); ++u) {
      users_.push_back("u" + std::to_string(u));
      add_node(users_.back(), p_.schema.user_type, 1.0);
    }
  }

  void make_items() {
    const Schema& s = p_.schema;
    for (std::size_t i = 0; i < p_.items; ++i) {
      const std::string& type = item_types_[i % item_types_.size()];
      const std::string id = type.substr(0, 1) + std::to_string(i);
      add_node(id, type, static_cast<double>(1 + poisson(5.0)));
      items_by_type_[type].push_back(id);
      if (!s.permits(type, s.taxonomy_edge, category_type_)) continue;
      const std::size_t count = 1 + poisson(p_.extra_categories_per_item);
      for (std::size_t k = 0; k < count; ++k) {
        add_edge(id, s.taxonomy_edge, categories_[skewed(categories_.size())], std::nullopt);
      }
    }
  }

  /// Non-taxonomy content-content relations (an artist singing a track, an
  /// answer answering a question). Every target gets one source, unless the
  /// source type has no category of its own: then every source gets one
  /// target, so that it is not left dangling.
  void make_content_links() {
    const Schema& s = p_.schema;
    for (const auto& t : s.triples) {
      if (t.edge_type == s.taxonomy_edge) continue;
      if (!s.is_item_type(t.source_type) || !s.is_item_type(t.target_type)) continue;
      const auto& sources = items_by_type_[t.source_type];
      const auto& targets = items_by_type_[t.target_type];
      if (sources.empty() || targets.empty()) continue;
      if (s.permits(t.source_type, s.taxonomy_edge, category_type_)) {
        for (const auto& target : targets) {
          add_edge(sources[skewed(sources.size())], t.edge_type, target, std::nullopt);
        }
      } else {
        for (const auto& source : sources) {
          add_edge(source, t.edge_type, targets[skewed(targets.size())], std::nullopt);
        }
      }
    }
  }

  double activity(std::size_t u) const { return u == 0 ? p_.focal_activity : 1.0; }

  void make_social() {
    const Schema& s = p_.schema;
    const bool user_follows = s.permits(s.user_type, s.follow_edge, s.user_type);
    const bool category_follows = s.permits(s.user_type, s.follow_edge, category_type_);
    for (std::size_t u = 0; u < users_.size(); ++u) {
      if (user_follows && users_.size() > 1) {
        const std::size_t n = poisson(p_.follows_per_user * activity(u));
        for (std::size_t k = 0; k < n; ++k) {
          add_edge(users_[u], s.follow_edge, users_[skewed(users_.size())], random_time());
        }
      }
      if (category_follows) {
        const std::size_t n = poisson(p_.category_follows_per_user * activity(u));
        for (std::size_t k = 0; k < n; ++k) {
          add_edge(users_[u], s.follow_edge, categories_[skewed(categories_.size())],
                   random_time());
        }
      }
    }
  }

  void make_actions() {
    const Schema& s = p_.schema;
    std::vector<const Triple*> actions;
    for (const auto& t : s.triples) {
      if (t.source_type == s.user_type && s.is_item_type(t.target_type) &&
          !items_by_type_[t.target_type].empty()) {
        actions.push_back(&t);
      }
    }
    if (actions.empty()) return;
    std::geometric_distribution<int> repeats(0.3);
    for (std::size_t u = 0; u < users_.size(); ++u) {
      const std::size_t n = poisson(p_.actions_per_user * activity(u));
      for (std::size_t k = 0; k < n; ++k) {
        const Triple& t = *actions[std::uniform_int_distribution<std::size_t>(
            0, actions.size() - 1)(rng_)];
        const auto& targets = items_by_type_[t.target_type];
        const double weight =
            s.repeatable.contains(t.edge_type) ? static_cast<double>(1 + repeats(rng_)) : 1.0;
        add_edge(users_[u], t.edge_type, targets[skewed(targets.size())], random_time(), weight);
      }
    }
  }

  void make_feed() {
    // Feed items are items the focal user has not acted on, preferring
    // popular ones so that they are reachable.
    std::set<std::string> touched;
    for (const auto& e : out_.edges) {
      if (e.source == out_.user) touched.insert(e.target);
    }
    std::vector<std::string> pool;
    for (const auto& type : item_types_) {
      const auto& items = items_by_type_[type];
      for (std::size_t i = 0; i < std::min<std::size_t>(items.size(), 12); ++i) {
        if (!touched.contains(items[i])) pool.push_back(items[i]);
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng_);
    const std::int64_t start = p_.time_span - p_.time_span / 5;
    for (std::size_t k = 0; k < std::min(p_.feed_items, pool.size()); ++k) {
      const std::int64_t seen =
          std::uniform_int_distribution<std::int64_t>(start, p_.time_span)(rng_);
      out_.feed.push_back(FeedItem{pool[k], seen, "s" + std::to_string(k)});
    }
  }

  const GeneratorParams& p_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  SyntheticGraph out_;
  std::string category_type_;
  std::vector<std::string> item_types_;
  std::vector<std::string> categories_;
  std::vector<std::string> users_;
  std::map<std::string, std::vector<std::string>> items_by_type_;
  std::set<std::string> seen_edges_;
};

}  // namespace

SyntheticGraph generate_graph(const GeneratorParams& params) {
  params.schema.validate();
  return Generator(params).run();
}

GeneratorParams lastfm_scale_params(std::uint64_t seed) {
  GeneratorParams p;
  p.schema = lastfm_schema();
  p.users = 2'000;
  p.categories = 1'000;
  p.items = 20'000;
  p.branching = 5;
  p.follows_per_user = 2.0;
  p.category_follows_per_user = 0.0;
  p.actions_per_user = 3.0;
  p.extra_categories_per_item = 0.0;
  p.focal_activity = 80.0;
  p.skew = 3.2;
  p.seed = seed;
  return p;
}

GeneratorParams quora_scale_params(std::uint64_t seed) {
  GeneratorParams p;
  p.schema = quora_schema();
  p.users = 6'000;
  p.categories = 2'000;
  p.items = 24'000;
  p.branching = 6;
  p.follows_per_user = 15.0;
  p.category_follows_per_user = 5.0;
  p.actions_per_user = 16.0;
  p.extra_categories_per_item = 1.0;
  p.focal_activity = 2.0;
  p.skew = 2.0;
  p.seed = seed;
  return p;
}

GeneratorParams bundled_params(std::uint64_t seed) {
  GeneratorParams p;
  p.schema = quora_schema();
  p.users = 60;
  p.categories = 15;
  p.items = 150;
  p.branching = 3;
  p.follows_per_user = 2.5;
  p.category_follows_per_user = 1.0;
  p.actions_per_user = 4.0;
  p.extra_categories_per_item = 0.3;
  p.focal_activity = 3.0;
  p.skew = 1.5;
  p.feed_items = 8;
  p.seed = seed;
  return p;
}

double hidden_utility(const FeatureVector& x, Aspect aspect) {
  const double confidence = x["pattern.confidence"];
  const double frequency = x["pattern.frequency"];
  const double length = x["instance.length"];
  if (aspect == Aspect::relevance) {
    return 2.0 * confidence + 0.5 * std::log1p(frequency) + x["instance.sim_item"] - 0.3 * length;
  }
  return -2.0 * confidence - 0.5 * std::log1p(frequency) + 0.2 * length;
}

std::vector<Judgment> simulate_judgments(const std::vector<std::pair<FeatureRow, FeatureRow>>& pairs,
                                         Aspect aspect, const std::vector<SimulatedJudge>& judges,
                                         std::uint64_t seed, std::int64_t judged_at) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Judgment> out;
  for (const auto& judge : judges) {
    for (const auto& [a, b] : pairs) {
      const double ua = hidden_utility(a.features, aspect) + judge.noise * gauss(rng);
      const double ub = hidden_utility(b.features, aspect) + judge.noise * gauss(rng);
      const bool first = prefer(ua, a.path_id, ub, b.path_id) == Choice::first;
      Judgment j;
      j.pair_id = a.path_id + "~" + b.path_id;
      j.better = first ? a.path_id : b.path_id;
      j.worse = first ? b.path_id : a.path_id;
      j.aspect = aspect;
      j.judge = judge.name;
      j.judged_at = judged_at;
      j.pair = a.pair;
      out.push_back(std::move(j));
    }
  }
  return out;
}

}  // namespace fairy
