#include <doctest.h>

#include <fstream>
#include <latch>
#include <thread>

#include <httplib.h>

#include "fairy/graph_io.hpp"
#include "fairy/service.hpp"
#include "fairy/similarity.hpp"
#include "support.hpp"

using namespace fairy;
using namespace fairy::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(FAIRY_SOURCE_DIR) / "data" / "synthetic";

/// Pipeline outputs for the bundled dataset, built once per test run.
const fs::path& pipeline_dir() {
  static TempDir dir("pipeline");
  static const bool built = [] {
    const auto g = load_graph(kData / "schema.json", kData / "nodes.jsonl", kData / "edges.jsonl");
    save_snapshot(g, dir.path() / "graph");
    std::vector<PairPaths> dump;
    const std::string user = g.node(g.user()).id;
    for (const auto& item : read_feed_file(kData / "feed.jsonl")) {
      dump.push_back({pair_key(user, item), item, enumerate_paths(g, user, item, {.max_len = 4})});
    }
    std::ofstream(dir.path() / "paths.jsonl") << [&] {
      std::ostringstream s;
      write_path_dump(g, dump, s);
      return s.str();
    }();
    const auto stats = build_pattern_stats(dump, g);
    auto sim = std::make_shared<TaxonomicSimilarity>(g);
    const Featurizer f(g, stats, {sim, sim});
    std::vector<FeatureRow> rows;
    for (const auto& pp : dump) {
      for (const auto& p : pp.paths) rows.push_back({p.id_hex(), pp.pair, f.featurize(p, pp.item)});
    }
    std::ofstream csv(dir.path() / "features.csv");
    write_feature_csv(f.layout(), rows, csv);
    return true;
  }();
  (void)built;
  return dir.path();
}

struct Workspace {
  TempDir dir{"workspace"};
  fs::path root;

  explicit Workspace(bool with_judgments, WorkspaceConfig config = {}) : root(dir.path() / "ws") {
    const auto& p = pipeline_dir();
    create_workspace(root, p / "graph", kData / "feed.jsonl", p / "paths.jsonl",
                     p / "features.csv", config);
    if (with_judgments) fs::copy_file(kData / "judgments.jsonl", WorkspaceLayout{root}.judgments());
  }
};

std::string judgment_body(const std::string& pair_id, const std::string& better,
                          const std::string& worse, const std::string& judge,
                          const std::string& pair = "") {
  Json j{{"pair_id", pair_id}, {"better", better}, {"worse", worse}, {"aspect", "relevance"},
         {"judge", judge}};
  if (!pair.empty()) j["pair"] = pair;
  return j.dump();
}

/// First mined pair with at least three distinct path ids.
std::pair<std::string, std::vector<std::string>> three_paths(const Service& s) {
  const auto dump = read_path_dump(s.graph(), pipeline_dir() / "paths.jsonl");
  for (const auto& pp : dump) {
    std::set<std::string> ids;
    for (const auto& p : pp.paths) ids.insert(p.id_hex());
    if (ids.size() >= 3) return {pp.pair, {ids.begin(), std::next(ids.begin(), 3)}};
  }
  FAIL("no pair has three paths");
  return {};
}

}  // namespace

TEST_CASE("feed items and stats") {
  Workspace ws(false);
  Service s(ws.root);
  const auto feed = s.feed_items();
  CHECK(feed.status == 200);
  CHECK(feed.body["user"] == s.graph().node(s.graph().user()).id);
  CHECK(feed.body["items"].size() == read_feed_file(kData / "feed.jsonl").size());

  const auto stats = s.stats();
  CHECK(stats.status == 200);
  CHECK(stats.body["graph"]["nodes"] == s.graph().node_count());
  CHECK(stats.body["queued_pairs"] == s.queue().size());
  CHECK(stats.body["judgments"]["total"] == 0);
  CHECK(stats.body["transitivity"]["relevance"].is_null());
  CHECK(stats.body["models"]["relevance"] == false);
}

TEST_CASE("pair queue") {
  Workspace ws(false, WorkspaceConfig{.pairs_per_item = 4});
  Service s(ws.root);
  REQUIRE(s.queue().size() > 5);
  for (const auto& q : s.queue()) CHECK(q.first != q.second);

  CHECK(s.pairs(std::nullopt, std::nullopt, "ann").status == 400);
  CHECK(s.pairs("taste", std::nullopt, "ann").status == 400);
  CHECK(s.pairs("relevance", "zero", "ann").status == 400);
  CHECK(s.pairs("relevance", "0", "ann").status == 400);

  const auto first = s.pairs("relevance", "3", "ann");
  REQUIRE(first.status == 200);
  CHECK(first.body["pairs"].size() == 3);
  CHECK(first.body["remaining"] == s.queue().size());
  const auto& offered = first.body["pairs"][0];
  CHECK(offered["first"]["nodes"].size() == offered["first"]["length"].get<std::size_t>() + 1);
  CHECK(offered["first"]["edge_types"].size() == offered["first"]["length"]);

  const auto stored = s.post_judgment(
      "application/json",
      judgment_body(offered["pair_id"], offered["first"]["id"], offered["second"]["id"], "ann",
                    offered["pair"]));
  CHECK(stored.status == 201);
  const auto after = s.pairs("relevance", "3", "ann");
  CHECK(after.body["remaining"] == s.queue().size() - 1);
  for (const auto& p : after.body["pairs"]) CHECK(p["pair_id"] != offered["pair_id"]);
  CHECK(s.pairs("relevance", "3", "bob").body["remaining"] == s.queue().size());
  CHECK(s.pairs("surprisal", "3", "ann").body["remaining"] == s.queue().size());
}

TEST_CASE("posting judgments") {
  Workspace ws(false);
  const auto [pair, ids] = [&] {
    Service s(ws.root);
    return three_paths(s);
  }();
  {
    Service s(ws.root);
    const auto body = judgment_body("p1", ids[0], ids[1], "ann", pair);
    CHECK(s.post_judgment("text/plain", body).status == 415);
    CHECK(s.post_judgment("application/json", "{not json").status == 400);
    CHECK(s.post_judgment("application/json", "[1, 2]").status == 400);
    CHECK(s.post_judgment("application/json", R"({"pair_id": "p1"})").status == 400);
    CHECK(s.post_judgment("application/json", judgment_body("p1", ids[0], ids[0], "ann")).status ==
          400);
    CHECK(s.post_judgment("application/json", judgment_body("p1", "ffff", ids[1], "ann")).status ==
          400);
    CHECK(s.post_judgment("application/json", judgment_body("p1", ids[0], ids[1], "ann", "nope"))
              .status == 400);

    const auto ok = s.post_judgment("application/json; charset=utf-8", body);
    CHECK(ok.status == 201);
    CHECK(ok.body["stored"]["judged_at"].get<std::int64_t>() > 0);
    CHECK(s.post_judgment("application/json", body).status == 409);
    CHECK(s.post_judgment("application/json", judgment_body("p1", ids[1], ids[0], "ann", pair))
              .status == 409);
    CHECK(s.post_judgment("application/json", judgment_body("p1", ids[0], ids[1], "bob", pair))
              .status == 201);
  }
  // Accepted judgments survive a restart, and so does duplicate detection.
  Service reopened(ws.root);
  CHECK(reopened.stats().body["judgments"]["total"] == 2);
  CHECK(reopened.stats().body["judgments"]["judges"] == 2);
  CHECK(reopened.post_judgment("application/json", judgment_body("p1", ids[0], ids[1], "ann", pair))
            .status == 409);
}

TEST_CASE("transitivity in stats") {
  Workspace ws(false);
  Service s(ws.root);
  const auto [pair, ids] = three_paths(s);
  const auto& a = ids[0];
  const auto& b = ids[1];
  const auto& c = ids[2];
  for (const auto& [id, better, worse] :
       std::vector<std::tuple<std::string, std::string, std::string>>{
           {"ab", a, b}, {"bc", b, c}, {"ac", a, c}}) {
    REQUIRE(s.post_judgment("application/json", judgment_body(id, better, worse, "ann", pair))
                .status == 201);
  }
  auto t = s.stats().body["transitivity"];
  CHECK(t["relevance"] == 1.0);
  CHECK(t["relevance_triplets"] == 1);
  CHECK(t["surprisal"].is_null());

  // A second judge who answers in a cycle.
  for (const auto& [id, better, worse] :
       std::vector<std::tuple<std::string, std::string, std::string>>{
           {"ab", a, b}, {"bc", b, c}, {"ac", c, a}}) {
    REQUIRE(s.post_judgment("application/json", judgment_body(id, better, worse, "cy", pair))
                .status == 201);
  }
  t = s.stats().body["transitivity"];
  CHECK(t["relevance"] == 0.5);
  CHECK(t["relevance_triplets"] == 2);
}

TEST_CASE("training and ranking") {
  Workspace ws(true);
  Service s(ws.root);
  const std::string item = read_feed_file(kData / "feed.jsonl").front().node;
  const std::string user = s.graph().node(s.graph().user()).id;

  CHECK(s.rank(user, item, std::nullopt, std::nullopt).status == 409);
  CHECK(s.train(std::nullopt).status == 400);
  CHECK(s.train("taste").status == 400);

  const auto trained = s.train("relevance");
  REQUIRE(trained.status == 200);
  CHECK(trained.body["test_accuracy"].get<double>() > 0.5);
  CHECK(trained.body["training_pairs"].get<std::size_t>() > trained.body["dev_pairs"].get<std::size_t>());
  CHECK(fs::exists(WorkspaceLayout{ws.root}.model(Aspect::relevance)));
  CHECK(s.stats().body["models"]["relevance"] == true);

  const auto ranked = s.rank(user, item, std::nullopt, "3");
  REQUIRE(ranked.status == 200);
  const auto& paths = ranked.body["paths"];
  REQUIRE(paths.size() == 3);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < paths.size(); ++r) {
    CHECK(paths[r]["rank"] == r + 1);
    const double score = paths[r]["score"];
    CHECK(score <= previous);
    previous = score;
    double total = 0.0;
    for (const auto& [name, v] : paths[r]["contributions"].items()) total += v.get<double>();
    CHECK(total == doctest::Approx(score).epsilon(1e-9));
  }
  CHECK(s.rank("", item, "relevance", std::nullopt).body["paths"].size() == 5);
  CHECK(s.rank("someone-else", item, std::nullopt, std::nullopt).status == 404);
  CHECK(s.rank(user, "no-such-item", std::nullopt, std::nullopt).status == 404);
  CHECK(s.rank(user, user, std::nullopt, std::nullopt).status == 404);
  CHECK(s.rank(user, item, "taste", std::nullopt).status == 400);
  CHECK(s.rank(user, item, std::nullopt, "-1").status == 400);
  CHECK(s.rank(user, item, "surprisal", std::nullopt).status == 409);

  // The trained model is picked up after a restart.
  Service reopened(ws.root);
  const auto again = reopened.rank(user, item, std::nullopt, "3");
  REQUIRE(again.status == 200);
  CHECK(again.body["paths"] == paths);
}

TEST_CASE("training needs judgments") {
  Workspace ws(false);
  Service s(ws.root);
  CHECK(s.train("relevance").status == 400);
}

TEST_CASE("concurrent retrains are refused") {
  Workspace ws(true);
  Service s(ws.root);
  bool refused = false;
  for (int round = 0; round < 20 && !refused; ++round) {
    constexpr int kThreads = 4;
    std::latch start(kThreads);
    std::vector<int> status(kThreads, 0);
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
      threads.emplace_back([&, t] {
        start.arrive_and_wait();
        status[t] = s.train("relevance").status;
      });
    }
    for (auto& t : threads) t.join();
    int ok = 0;
    for (int st : status) {
      CHECK((st == 200 || st == 503));
      ok += st == 200;
      refused = refused || st == 503;
    }
    CHECK(ok >= 1);
  }
  CHECK(refused);
  CHECK(s.train("relevance").status == 200);
}

TEST_CASE("http endpoints") {
  Workspace ws(true);
  Service s(ws.root);
  httplib::Server server;
  s.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto feed = client.Get("/feed-items");
  REQUIRE(feed);
  CHECK(feed->status == 200);
  CHECK(feed->get_header_value("Content-Type") == "application/json");
  CHECK(Json::parse(feed->body)["items"].size() > 0);

  auto pairs = client.Get("/pairs?aspect=surprisal&n=2&judge=web");
  REQUIRE(pairs);
  CHECK(pairs->status == 200);
  const auto offered = Json::parse(pairs->body)["pairs"][0];
  CHECK(client.Get("/pairs")->status == 400);

  const auto body = Json{{"pair_id", offered["pair_id"]},
                         {"better", offered["second"]["id"]},
                         {"worse", offered["first"]["id"]},
                         {"aspect", "surprisal"},
                         {"judge", "web"},
                         {"pair", offered["pair"]}}
                        .dump();
  CHECK(client.Post("/judgments", body, "text/plain")->status == 415);
  CHECK(client.Post("/judgments", "{", "application/json")->status == 400);
  CHECK(client.Post("/judgments", body, "application/json")->status == 201);
  CHECK(client.Post("/judgments", body, "application/json")->status == 409);

  const std::string item = Json::parse(feed->body)["items"][0]["item"];
  CHECK(client.Get("/rank?item=" + item)->status == 409);
  auto trained = client.Post("/train?aspect=relevance", "", "application/json");
  REQUIRE(trained);
  CHECK(trained->status == 200);
  auto ranked = client.Get("/rank?item=" + item + "&k=2");
  REQUIRE(ranked);
  CHECK(ranked->status == 200);
  CHECK(Json::parse(ranked->body)["paths"].size() == 2);
  CHECK(client.Get("/rank?item=nothing")->status == 404);

  auto stats = client.Get("/stats");
  REQUIRE(stats);
  CHECK(Json::parse(stats->body)["judgments"]["surprisal"].get<std::size_t>() > 0);
  CHECK(Json::parse(stats->body)["models"]["relevance"] == true);

  server.stop();
  serving.join();
}
