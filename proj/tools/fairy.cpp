// Command-line entry point: one subcommand per pipeline stage.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "fairy/baselines.hpp"
#include "fairy/error.hpp"
#include "fairy/eval.hpp"
#include "fairy/graph_io.hpp"
#include "fairy/service.hpp"
#include "fairy/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fairy;

namespace {

/// Exit status for a missing trained model.
constexpr int kNoModel = 2;

class NoModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  // build-graph
  fs::path schema, nodes, edges;
  // shared
  fs::path graph, feed, paths, features, judgments, model, out, config, table;
  std::string user, item, aspect = "relevance";
  std::uint64_t seed = 1;
  // mine
  int max_len = 4;
  std::size_t path_cap = 1'000'000;
  // featurize
  fs::path embeddings;
  std::string popularity = "followers";
  // sample
  std::string strategy = "random";
  std::size_t n = 25;
  // simulate-judgments
  fs::path pairs;
  std::size_t judges = 3;
  double noise = 0.3;
  // train
  std::vector<double> c_grid = kDefaultCGrid;
  std::uint64_t split_seed = 7;
  // rank
  std::size_t k = 5;
  // baselines
  std::string center = "min";
  // serve
  fs::path workspace;
  std::string host = "127.0.0.1";
  int port = 8080;
  // synth
  std::string kind = "bundled";
};

template <typename Fn>
void write_atomically(const fs::path& target, Fn fn) {
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  AtomicFile out(target);
  fn(out.stream());
  out.stream().flush();
  if (!out.stream()) throw IoError("could not write " + target.string());
  out.commit();
}

std::shared_ptr<const SimilarityProvider> similarity_for(const InteractionGraph& g,
                                                         const fs::path& embeddings) {
  auto taxonomic = std::make_shared<const TaxonomicSimilarity>(g);
  if (embeddings.empty()) return taxonomic;
  return std::make_shared<const EmbeddingSimilarity>(g, read_embeddings(embeddings), taxonomic);
}

void build_graph_cmd(const Options& o) {
  const auto g = load_graph(o.schema, o.nodes, o.edges);
  save_snapshot(g, o.out);
  std::printf("graph: %zu nodes, %zu directed edges -> %s\n", g.node_count(), g.edge_count(),
              o.out.c_str());
}

void mine_cmd(const Options& o) {
  const auto g = load_snapshot(o.graph);
  const std::string user = o.user.empty() ? g.node(g.user()).id : o.user;
  MineOptions options;
  options.max_len = o.max_len;
  options.path_cap = o.path_cap;
  std::vector<PairPaths> dump;
  std::size_t total = 0;
  for (const auto& item : read_feed_file(o.feed)) {
    auto paths = enumerate_paths(g, user, item, options);
    total += paths.size();
    dump.push_back(PairPaths{pair_key(user, item), item, std::move(paths)});
  }
  write_atomically(o.out, [&](std::ostream& out) { write_path_dump(g, dump, out); });
  std::printf("mined %zu paths for %zu feed items -> %s\n", total, dump.size(), o.out.c_str());
}

void featurize_cmd(const Options& o) {
  const auto g = load_snapshot(o.graph);
  const auto dump = read_path_dump(g, o.paths);
  const auto stats = build_pattern_stats(dump, g);
  FeatureConfig config;
  config.popularity_attribute = o.popularity;
  const auto sim = similarity_for(g, o.embeddings);
  const Featurizer featurizer(g, stats, SimilarityProviders{sim, sim}, config);
  std::vector<FeatureRow> rows;
  for (const auto& pp : dump) {
    for (const auto& p : pp.paths) {
      rows.push_back(FeatureRow{p.id_hex(), pp.pair, featurizer.featurize(p, pp.item)});
    }
  }
  write_atomically(o.out, [&](std::ostream& out) {
    write_feature_csv(featurizer.layout(), rows, out);
  });
  std::printf("featurized %zu paths (%zu features) -> %s\n", rows.size(),
              featurizer.layout().size(), o.out.c_str());
}

void sample_cmd(const Options& o) {
  const auto strategy = parse_sampling(o.strategy);
  if (!strategy) throw ConfigError("unknown sampling strategy '" + o.strategy + "'");
  const auto g = load_snapshot(o.graph);
  const auto dump = read_path_dump(g, o.paths);
  std::size_t count = 0;
  std::size_t short_items = 0;
  write_atomically(o.out, [&](std::ostream& out) {
    for (std::size_t i = 0; i < dump.size(); ++i) {
      const auto& pp = dump[i];
      if (pp.paths.size() < 2) continue;
      const std::uint64_t seed = o.seed + i;
      PairSample sample;
      switch (*strategy) {
        case Sampling::random: sample = sample_random_pairs(pp.paths.size(), o.n, seed); break;
        case Sampling::perturb_user:
          sample = sample_perturbation_pairs(pp.paths, g, NodeRole::user, o.n, seed);
          break;
        case Sampling::perturb_category:
          sample = sample_perturbation_pairs(pp.paths, g, NodeRole::category, o.n, seed);
          break;
        case Sampling::perturb_item:
          sample = sample_perturbation_pairs(pp.paths, g, NodeRole::item, o.n, seed);
          break;
      }
      if (sample.short_of_request) ++short_items;
      for (const auto& [a, b] : sample.pairs) {
        const auto first = pp.paths[a].id_hex();
        const auto second = pp.paths[b].id_hex();
        if (first == second) continue;
        out << Json{{"pair_id", first + "~" + second},
                    {"pair", pp.pair},
                    {"first", first},
                    {"second", second},
                    {"strategy", o.strategy}}
                   .dump()
            << '\n';
        ++count;
      }
    }
  });
  if (short_items > 0) {
    spdlog::warn("{} of {} feed items have fewer than {} {} pairs", short_items, dump.size(), o.n,
                 o.strategy);
  }
  std::printf("sampled %zu path pairs -> %s\n", count, o.out.c_str());
}

void simulate_cmd(const Options& o) {
  const auto aspect = parse_aspect(o.aspect);
  if (!aspect) throw ConfigError("unknown aspect '" + o.aspect + "'");
  const auto table = read_feature_csv(o.features);
  std::vector<std::pair<FeatureRow, FeatureRow>> pairs;
  for (const auto& j : read_json_lines(o.pairs)) {
    const auto pair = j.at("pair").get<std::string>();
    const auto* a = table.find(j.at("first").get<std::string>(), pair);
    const auto* b = table.find(j.at("second").get<std::string>(), pair);
    if (!a || !b) throw FeatureError("sampled pair " + j.at("pair_id").dump() + " has no features");
    pairs.emplace_back(*a, *b);
  }
  std::vector<SimulatedJudge> judges;
  for (std::size_t k = 0; k < o.judges; ++k) {
    judges.push_back(SimulatedJudge{"judge" + std::to_string(k + 1),
                                    o.noise * static_cast<double>(k + 1)});
  }
  const auto judgments = simulate_judgments(pairs, *aspect, judges, o.seed);
  write_atomically(o.out, [&](std::ostream& out) {
    for (const auto& j : judgments) out << to_json(j).dump() << '\n';
  });
  std::printf("simulated %zu %s judgments -> %s\n", judgments.size(), aspect_name(*aspect),
              o.out.c_str());
}

void train_cmd(const Options& o) {
  const auto aspect = parse_aspect(o.aspect);
  if (!aspect) throw ConfigError("unknown aspect '" + o.aspect + "'");
  const auto table = read_feature_csv(o.features);
  const auto prefs = attach_features(read_judgments(o.judgments), table, *aspect);
  const auto parts = split(prefs, o.split_seed);
  TrainParams params;
  params.seed = o.seed;
  const auto selection = train_with_dev(parts.train, parts.dev, o.c_grid, params);
  if (o.model.parent_path() != "") fs::create_directories(o.model.parent_path());
  save_model(selection.model, o.model);
  std::printf("%s model: C=%g dev accuracy %.4f test accuracy %.4f (%zu/%zu/%zu pairs) -> %s\n",
              aspect_name(*aspect), selection.c, selection.dev_accuracy,
              pairwise_accuracy(selection.model, parts.test), parts.train.size(),
              parts.dev.size(), parts.test.size(), o.model.c_str());
}

void rank_cmd(const Options& o) {
  if (!fs::exists(o.model)) throw NoModel("no trained model at " + o.model.string());
  const auto model = load_model(o.model);
  const auto g = load_snapshot(o.graph);
  const auto dump = read_path_dump(g, o.paths);
  const auto table = read_feature_csv(o.features);
  const std::string user = o.user.empty() ? g.node(g.user()).id : o.user;
  const PairPaths* pp = nullptr;
  for (const auto& candidate : dump) {
    const auto [owner, item] = parse_pair_key(candidate.pair);
    if (owner != user || item.node != o.item) continue;
    if (!pp || item.seen_at > pp->item.seen_at) pp = &candidate;
  }
  if (!pp) throw PathError("no mined paths for (" + user + ", " + o.item + ")");
  std::vector<RankItem> items;
  for (const auto& p : pp->paths) {
    const auto* row = table.find(p.id_hex(), pp->pair);
    if (!row) throw FeatureError("path " + p.id_hex() + " has no feature row");
    items.push_back(RankItem{row->path_id, row->features});
  }
  const auto ranked = rank_paths(model, items);
  std::ostringstream text;
  for (std::size_t r = 0; r < ranked.size() && r < o.k; ++r) {
    char head[96];
    std::snprintf(head, sizeof head, "%2zu  %+.6f  %s  ", r + 1, ranked[r].score,
                  ranked[r].path_id.c_str());
    text << head << describe(g, pp->paths[ranked[r].input_index]) << '\n';
  }
  if (!o.out.empty()) {
    write_atomically(o.out, [&](std::ostream& out) { out << text.str(); });
  }
  std::cout << text.str();
}

void baselines_cmd(const Options& o) {
  const auto g = load_snapshot(o.graph);
  const auto dump = read_path_dump(g, o.paths);
  const auto stats = build_pattern_stats(dump, g);
  const CenterRule rule = o.center == "mean" ? CenterRule::mean : CenterRule::min;
  const auto scores = score_baselines(g, stats, dump, rule);
  write_atomically(o.out, [&](std::ostream& out) { write_score_csv(scores, out); });
  std::printf("scored %zu (path, method) entries -> %s\n", scores.size(), o.out.c_str());
}

void eval_cmd(const Options& o) {
  const Json doc = read_json_file(o.config);
  std::vector<ExperimentConfig> configs;
  const Json& list = doc.is_object() && doc.contains("experiments") ? doc.at("experiments") : doc;
  if (list.is_array()) {
    for (const auto& e : list) configs.push_back(parse_experiment_config(e));
  } else {
    configs.push_back(parse_experiment_config(list));
  }
  const auto g = load_snapshot(o.graph);
  ExperimentData data;
  data.graph = &g;
  data.pairs = read_path_dump(g, o.paths);
  const auto stats = build_pattern_stats(data.pairs, g);
  const auto table = read_feature_csv(o.features);
  data.stats = &stats;
  data.features = &table;
  data.judgments = read_judgments(o.judgments);
  std::vector<ExperimentResults> results;
  for (const auto& c : configs) results.push_back(run_experiment(c, data));
  const std::string text = format_results(results);
  write_atomically(o.out, [&](std::ostream& out) { write_results_csv(results, out); });
  if (!o.table.empty()) write_atomically(o.table, [&](std::ostream& out) { out << text; });
  std::cout << text;
}

void workspace_cmd(const Options& o) {
  WorkspaceConfig config;
  config.seed = o.seed;
  config.pairs_per_item = o.n;
  create_workspace(o.out, o.graph, o.feed, o.paths, o.features, config);
  std::printf("workspace ready at %s\n", o.out.c_str());
}

void serve_cmd(const Options& o) {
  fs::path root = o.workspace;
  if (root.empty()) {
    const char* env = std::getenv("FAIRY_WORKSPACE");
    if (!env) throw ConfigError("no workspace given and FAIRY_WORKSPACE is not set");
    root = env;
  }
  Service service(root);
  httplib::Server server;
  service.mount(server);
  spdlog::info("serving {} on http://{}:{}", root.string(), o.host, o.port);
  if (!server.listen(o.host, o.port)) {
    throw IoError("could not listen on " + o.host + ":" + std::to_string(o.port));
  }
}

void synth_cmd(const Options& o) {
  SyntheticGraph g;
  if (o.kind == "fig1") {
    g = fig1_fixture();
  } else if (o.kind == "bundled") {
    g = generate_graph(bundled_params(o.seed));
  } else if (o.kind == "lastfm") {
    g = generate_graph(lastfm_scale_params(o.seed));
  } else if (o.kind == "quora") {
    g = generate_graph(quora_scale_params(o.seed));
  } else {
    throw ConfigError("unknown synthetic kind '" + o.kind + "'");
  }
  write_synthetic(g, o.out);
  std::printf("%s: %zu nodes, %zu actions, %zu feed items -> %s\n", o.kind.c_str(),
              g.nodes.size(), g.edges.size(), g.feed.size(), o.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation paths for social feed items: mining, features, ranking, evaluation"};
  app.require_subcommand(1);
  Options o;

  auto* build = app.add_subcommand("build-graph", "Validate event logs and write a graph snapshot");
  build->add_option("--schema", o.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--nodes", o.nodes, "Node JSON Lines")->required()->check(CLI::ExistingFile);
  build->add_option("--edges", o.edges, "Edge JSON Lines")->required()->check(CLI::ExistingFile);
  build->add_option("--out", o.out, "Snapshot directory")->required();

  auto* mine = app.add_subcommand("mine", "Enumerate explanation paths for every feed item");
  mine->add_option("--graph", o.graph, "Snapshot directory")->required();
  mine->add_option("--feed", o.feed, "Feed JSON Lines")->required()->check(CLI::ExistingFile);
  mine->add_option("--user", o.user, "Focal user (default: the graph's user)");
  mine->add_option("--max-len", o.max_len, "Maximum path length in edges")->check(CLI::Range(1, 16));
  mine->add_option("--path-cap", o.path_cap, "Fail when a pair has more paths than this");
  mine->add_option("--out", o.out, "Path dump")->required();

  auto* featurize = app.add_subcommand("featurize", "Compute feature vectors for a path dump");
  featurize->add_option("--graph", o.graph, "Snapshot directory")->required();
  featurize->add_option("--paths", o.paths, "Path dump")->required()->check(CLI::ExistingFile);
  featurize->add_option("--embeddings", o.embeddings, "Node embeddings JSON Lines");
  featurize->add_option("--popularity", o.popularity, "Category popularity counter")
      ->check(CLI::IsMember({"followers", "posts"}));
  featurize->add_option("--out", o.out, "Feature CSV")->required();

  auto* sample = app.add_subcommand("sample", "Sample path pairs per feed item for judgment");
  sample->add_option("--graph", o.graph, "Snapshot directory")->required();
  sample->add_option("--paths", o.paths, "Path dump")->required()->check(CLI::ExistingFile);
  sample->add_option("--strategy", o.strategy,
                     "random, perturb_user, perturb_category or perturb_item");
  sample->add_option("--n", o.n, "Pairs per feed item");
  sample->add_option("--seed", o.seed, "Sampling seed");
  sample->add_option("--out", o.out, "Pair JSON Lines")->required();

  auto* simulate =
      app.add_subcommand("simulate-judgments", "Judge sampled pairs with simulated judges");
  simulate->add_option("--pairs", o.pairs, "Pair JSON Lines")->required()->check(CLI::ExistingFile);
  simulate->add_option("--features", o.features, "Feature CSV")->required();
  simulate->add_option("--aspect", o.aspect, "relevance or surprisal");
  simulate->add_option("--judges", o.judges, "Number of judges");
  simulate->add_option("--noise", o.noise, "Noise of the first judge (grows per judge)");
  simulate->add_option("--seed", o.seed, "Noise seed");
  simulate->add_option("--out", o.out, "Judgment JSON Lines")->required();

  auto* train = app.add_subcommand("train", "Train a ranking model from judgments");
  train->add_option("--judgments", o.judgments, "Judgment JSON Lines")->required();
  train->add_option("--features", o.features, "Feature CSV")->required();
  train->add_option("--aspect", o.aspect, "relevance or surprisal");
  train->add_option("--c-grid", o.c_grid, "Regularization values tried on dev");
  train->add_option("--split-seed", o.split_seed, "Train/dev/test split seed");
  train->add_option("--seed", o.seed, "Training seed");
  train->add_option("--out", o.model, "Model JSON")->required();

  auto* rank = app.add_subcommand("rank", "Rank the explanation paths of one (user, item) pair");
  rank->add_option("--model", o.model, "Model JSON")->required();
  rank->add_option("--graph", o.graph, "Snapshot directory")->required();
  rank->add_option("--paths", o.paths, "Path dump")->required();
  rank->add_option("--features", o.features, "Feature CSV")->required();
  rank->add_option("--user", o.user, "User (default: the graph's user)");
  rank->add_option("--item", o.item, "Feed item")->required();
  rank->add_option("--k", o.k, "Paths to show");
  rank->add_option("--out", o.out, "Also write the ranking here");

  auto* baselines = app.add_subcommand("baselines", "Score paths with PRA, REX and ESPRESSO");
  baselines->add_option("--graph", o.graph, "Snapshot directory")->required();
  baselines->add_option("--paths", o.paths, "Path dump")->required();
  baselines->add_option("--center", o.center, "ESPRESSO center rule")
      ->check(CLI::IsMember({"min", "mean"}));
  baselines->add_option("--out", o.out, "Score CSV")->required();

  auto* eval = app.add_subcommand("eval", "Run experiments and compare against baselines");
  eval->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--graph", o.graph, "Snapshot directory")->required();
  eval->add_option("--paths", o.paths, "Path dump")->required();
  eval->add_option("--features", o.features, "Feature CSV")->required();
  eval->add_option("--judgments", o.judgments, "Judgment JSON Lines")->required();
  eval->add_option("--out", o.out, "Results CSV")->required();
  eval->add_option("--table", o.table, "Also write the text tables here");

  auto* workspace = app.add_subcommand("workspace", "Assemble a service workspace");
  workspace->add_option("--graph", o.graph, "Snapshot directory")->required();
  workspace->add_option("--feed", o.feed, "Feed JSON Lines")->required();
  workspace->add_option("--paths", o.paths, "Path dump")->required();
  workspace->add_option("--features", o.features, "Feature CSV")->required();
  workspace->add_option("--n", o.n, "Pairs queued per feed item");
  workspace->add_option("--seed", o.seed, "Pair sampling seed");
  workspace->add_option("--out", o.out, "Workspace directory")->required();

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API over a workspace");
  serve->add_option("--workspace", o.workspace, "Workspace directory (default: $FAIRY_WORKSPACE)");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port", o.port, "Port");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic interaction graph");
  synth->add_option("--kind", o.kind, "fig1, bundled, lastfm or quora");
  synth->add_option("--seed", o.seed, "Generator seed");
  synth->add_option("--out", o.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  const std::pair<CLI::App*, void (*)(const Options&)> commands[] = {
      {build, build_graph_cmd}, {mine, mine_cmd},           {featurize, featurize_cmd},
      {sample, sample_cmd},     {simulate, simulate_cmd},   {train, train_cmd},
      {rank, rank_cmd},         {baselines, baselines_cmd}, {eval, eval_cmd},
      {workspace, workspace_cmd}, {serve, serve_cmd},       {synth, synth_cmd},
  };
  try {
    for (const auto& [cmd, run] : commands) {
      if (cmd->parsed()) run(o);
    }
  } catch (const NoModel& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNoModel;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
