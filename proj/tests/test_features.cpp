#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fairy/error.hpp"
#include "fairy/features.hpp"
#include "fairy/similarity.hpp"
#include "feature_cases.hpp"
#include "support.hpp"

using namespace fairy;
using namespace fairy::testing;

TEST_CASE("hand-computed feature vectors") {
  for (const auto& c : feature_cases()) {
    CAPTURE(c.label);
    const auto& names = c.actual.layout->names;
    REQUIRE(names.size() == c.expected.size());
    for (const auto& name : names) {
      CAPTURE(name);
      REQUIRE(c.expected.contains(name));
      CHECK(c.actual[name] == doctest::Approx(c.expected.at(name)).epsilon(1e-12));
    }
  }
}

TEST_CASE("edge weight column depends on the schema") {
  const auto quora = make_layout(quora_schema());
  const auto lastfm = make_layout(lastfm_schema());
  CHECK_FALSE(quora.index_of("instance.mean_edge_weight"));
  CHECK(lastfm.index_of("instance.mean_edge_weight"));
  CHECK(layout_from_names(quora.names) == quora);
  CHECK(layout_from_names(quora.names).groups == quora.groups);
  CHECK_THROWS_AS(layout_from_names({"nonsense"}), FeatureError);
}

TEST_CASE("ablation switches change the layout") {
  FeatureConfig c;
  c.node_type_counts = true;
  c.edge_category_counts = true;
  const auto l = make_layout(quora_schema(), c);
  CHECK(l.index_of("pattern.node_count.question"));
  CHECK(l.index_of("pattern.count.user-content"));
  CHECK_FALSE(l.index_of("pattern.count.asks"));
}

TEST_CASE("masking keeps whole groups") {
  const auto layout = make_layout(quora_schema());
  const auto [masked, kept] = mask_layout(layout, {FeatureGroup::pattern, FeatureGroup::user});
  REQUIRE(masked.size() == kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    CHECK(masked.names[i] == layout.names[kept[i]]);
    CHECK((masked.groups[i] == FeatureGroup::pattern || masked.groups[i] == FeatureGroup::user));
  }
  CHECK(masked.index_of("present.user"));
  CHECK_FALSE(masked.index_of("present.similarity"));
}

TEST_CASE("taxonomic similarity") {
  SyntheticGraph sg;
  sg.schema = toy_schema();
  sg.user = "u";
  sg.nodes = {{"u", "user", 1, {}, true},      {"root", "category", 1, {}, false},
              {"a", "category", 1, {}, false}, {"b", "category", 1, {}, false},
              {"x", "category", 1, {}, false}, {"p", "post", 1, {}, false},
              {"q", "post", 1, {}, false}};
  sg.edges = {{"a", "root", "belongs-to", 1, std::nullopt, ""},
              {"b", "root", "belongs-to", 1, std::nullopt, ""},
              {"p", "a", "belongs-to", 1, std::nullopt, ""},
              {"p", "x", "belongs-to", 1, std::nullopt, ""},
              {"u", "b", "follows", 1, 1, ""}};
  const auto g = sg.build();
  TaxonomicSimilarity sim(g);
  auto n = [&](const char* id) { return g.require(id); };
  CHECK(sim.similarity(n("a"), n("a")) == 1.0);
  CHECK(sim.similarity(n("a"), n("b")) == doctest::Approx(1.0 / 3.0));
  CHECK(sim.similarity(n("a"), n("x")) == 0.0);
  CHECK(sim.similarity(n("q"), n("a")) == 0.0);
  // p sits in a and x; u follows b: nearest pair is (a, b).
  CHECK(sim.similarity(n("p"), n("u")) == doctest::Approx(1.0 / 3.0));
  CHECK(sim.similarity(n("u"), n("p")) == sim.similarity(n("p"), n("u")));
  CHECK(associated_categories(g, n("p")) == std::vector<NodeIndex>{std::min(n("a"), n("x")), std::max(n("a"), n("x"))});
}

TEST_CASE("embedding similarity") {
  const auto g = fig1_fixture().build();
  auto n = [&](const char* id) { return g.require(id); };
  EmbeddingTable t;
  t.dim = 2;
  t.vectors = {{"Health", {1, 0}}, {"Food", {1, 0}}, {"Science", {0, 3}}, {"Organics", {-2, 0}}};
  EmbeddingSimilarity sim(g, t);
  CHECK(sim.similarity(n("Health"), n("Food")) == doctest::Approx(1.0));
  CHECK(sim.similarity(n("Health"), n("Science")) == doctest::Approx(0.5));
  CHECK(sim.similarity(n("Health"), n("Organics")) == doctest::Approx(0.0));
  CHECK(sim.similarity(n("Bob"), n("Bob")) == 1.0);
  // Without a vector and without a fallback the similarity is 0.
  CHECK(sim.similarity(n("Bob"), n("Health")) == 0.0);
  CHECK(sim.missing_count() == 1);

  auto fallback = std::make_shared<TaxonomicSimilarity>(g);
  EmbeddingSimilarity with_fallback(g, t, fallback);
  CHECK(with_fallback.similarity(n("Chemistry"), n("Health")) ==
        doctest::Approx(fallback->similarity(n("Chemistry"), n("Health"))));
  CHECK(with_fallback.missing_count() == 0);

  TempDir dir("emb");
  std::ofstream(dir / "ok.jsonl") << R"({"id": "Health", "vec": [1, 2]})" << "\n";
  CHECK(read_embeddings(dir / "ok.jsonl").dim == 2);
  std::ofstream(dir / "bad.jsonl") << R"({"id": "Health", "vec": [1, 2]})" << "\n"
                                   << R"({"id": "Food", "vec": [1]})" << "\n";
  CHECK_THROWS_AS(read_embeddings(dir / "bad.jsonl"), FeatureError);
}

TEST_CASE("similarities stay in the unit interval on random graphs") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = random_graph(seed).build();
    TaxonomicSimilarity sim(g);
    for (NodeIndex a = 0; a < g.node_count(); ++a) {
      for (NodeIndex b = 0; b < g.node_count(); ++b) {
        const double s = sim.similarity(a, b);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == sim.similarity(b, a));
      }
      CHECK(sim.similarity(a, a) == 1.0);
    }
  }
}

TEST_CASE("user and category counters") {
  SyntheticGraph sg;
  sg.schema = toy_schema();
  sg.user = "u0";
  for (int i = 0; i < 12; ++i) sg.nodes.push_back({"u" + std::to_string(i), "user", 1, {}, i == 0});
  sg.nodes.push_back({"solo", "user", 1, {}, false});
  sg.edges.push_back({"u3", "solo", "follows", 1, 1, ""});
  sg.edges.push_back({"u4", "solo", "follows", 1, 1, ""});
  sg.nodes.push_back({"top", "category", 1, {}, false});
  sg.nodes.push_back({"mid", "category", 1, {}, false});
  sg.nodes.push_back({"side", "category", 1, {}, false});
  sg.nodes.push_back({"leaf", "category", 1, {}, false});
  // u1 has 10 followers and follows 5 users.
  for (int i = 2; i < 12; ++i) sg.edges.push_back({"u" + std::to_string(i), "u1", "follows", 1, 1, ""});
  for (int i = 2; i < 7; ++i) sg.edges.push_back({"u1", "u" + std::to_string(i), "follows", 1, 1, ""});
  // leaf has two parents at depths 1 (mid) and 0 (side).
  sg.edges.push_back({"mid", "top", "belongs-to", 1, std::nullopt, ""});
  sg.edges.push_back({"leaf", "mid", "belongs-to", 1, std::nullopt, ""});
  sg.edges.push_back({"leaf", "side", "belongs-to", 1, std::nullopt, ""});
  const auto g = sg.build();
  const PatternStats stats;
  auto sim = std::make_shared<TaxonomicSimilarity>(g);
  const Featurizer f(g, stats, {sim, sim});
  CHECK(f.link_ratio(g.require("u1")) == 2.0);
  // No followees: the follower count itself.
  CHECK(f.link_ratio(g.require("solo")) == 2.0);
  CHECK(f.link_ratio(g.require("u0")) == 0.0);
  CHECK(f.category_depth(g.require("top")) == 0);
  CHECK(f.category_depth(g.require("mid")) == 1);
  CHECK(f.category_depth(g.require("leaf")) == 1);
  CHECK_THROWS_AS(f.category_depth(g.require("u1")), FeatureError);
}

TEST_CASE("a taxonomy cycle without a root is an error") {
  SyntheticGraph sg;
  sg.schema = toy_schema();
  sg.user = "u";
  sg.nodes = {{"u", "user", 1, {}, true}, {"a", "category", 1, {}, false}, {"b", "category", 1, {}, false}};
  sg.edges = {{"a", "b", "belongs-to", 1, std::nullopt, ""},
              {"b", "a", "belongs-to", 1, std::nullopt, ""},
              {"u", "a", "follows", 1, 1, ""}};
  const auto g = sg.build();
  const PatternStats stats;
  auto sim = std::make_shared<TaxonomicSimilarity>(g);
  const Featurizer f(g, stats, {sim, sim});
  CHECK_THROWS_AS(f.category_depth(g.require("a")), FeatureError);
}

TEST_CASE("featurization properties on random graphs") {
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    const auto sg = random_graph(seed);
    const auto g = sg.build();
    const auto& item = sg.feed[0];
    const auto paths = enumerate_paths(g, sg.user, item, {.max_len = 4});
    const auto stats = build_pattern_stats(std::vector<CorpusEntry>{{"p", paths}}, g);
    auto sim = std::make_shared<TaxonomicSimilarity>(g);
    const Featurizer f(g, stats, {sim, sim});
    for (const auto& p : paths) {
      FeatureVector a;
      try {
        a = f.featurize(p, item);
      } catch (const FeatureError&) {
        continue;  // random taxonomies may contain rootless cycles
      }
      const auto b = f.featurize(p, item);
      CHECK(a.values == b.values);
      CHECK(a["instance.sim_item"] >= 0.0);
      CHECK(a["instance.sim_item"] <= 1.0);
      CHECK(a["instance.sim_user"] >= 0.0);
      CHECK(a["instance.sim_user"] <= 1.0);
      if (a["present.recency"] == 1.0) CHECK(a["instance.recency"] > 0.0);
      CHECK(a["pattern.confidence"] == 1.0);
      CHECK(a["pattern.frequency"] >= 1.0);
    }
  }
}

TEST_CASE("feature csv round trip") {
  const auto cases = feature_cases();
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < 3; ++i) rows.push_back({"id" + std::to_string(i), "Alice|bomb-post|13", cases[i].actual});
  TempDir dir("csv");
  {
    std::ofstream out(dir / "f.csv");
    write_feature_csv(*cases[0].actual.layout, rows, out);
  }
  const auto table = read_feature_csv(dir / "f.csv");
  REQUIRE(table.rows().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(table.rows()[i].features.values == rows[i].features.values);
  CHECK(table.find("id1")->path_id == "id1");
  CHECK(table.find("id1", "other") == nullptr);

  std::ofstream(dir / "bad.csv") << "path_id,pair,user.link_ratio\nx,y,notanumber\n";
  CHECK_THROWS_AS(read_feature_csv(dir / "bad.csv"), FeatureError);
  std::ofstream(dir / "short.csv") << "path_id,pair,user.link_ratio\nx,y\n";
  CHECK_THROWS_AS(read_feature_csv(dir / "short.csv"), FeatureError);
}
