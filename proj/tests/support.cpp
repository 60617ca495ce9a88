#include "support.hpp"

#include <atomic>
#include <cstdlib>

#include <sys/wait.h>

#include <unistd.h>

#include "fairy/error.hpp"

namespace fairy::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("fairy-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Schema toy_schema(bool repeatable_likes) {
  Schema s;
  s.platform = "toy";
  s.node_types = {"user", "category", "post"};
  s.edge_types = {"follows", "likes", "belongs-to"};
  s.triples = {{"user", "follows", "user"},         {"user", "follows", "category"},
               {"user", "likes", "post"},           {"post", "belongs-to", "category"},
               {"category", "belongs-to", "category"}};
  if (repeatable_likes) s.repeatable = {"likes"};
  s.validate();
  return s;
}

SyntheticGraph random_graph(std::uint64_t seed, const RandomGraphSpec& spec) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  SyntheticGraph g;
  g.schema = toy_schema();
  g.user = "n0";
  const std::size_t n = 2 + pick(spec.max_nodes - 1);
  const char* types[] = {"user", "category", "post"};
  for (std::size_t i = 0; i < n; ++i) {
    NodeRecord r;
    r.id = "n" + std::to_string(i);
    r.type = i == 0 ? "user" : types[pick(3)];
    r.weight = 1.0;
    r.is_user = i == 0;
    g.nodes.push_back(std::move(r));
  }
  const std::size_t m = pick(spec.max_edges + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < 4 * m && g.edges.size() < m; ++k) {
    const auto& a = g.nodes[pick(n)];
    const auto& b = g.nodes[pick(n)];
    if (a.id == b.id) continue;
    std::vector<std::string> allowed;
    for (const auto& t : g.schema.triples) {
      if (t.source_type == a.type && t.target_type == b.type) allowed.push_back(t.edge_type);
    }
    if (allowed.empty()) continue;
    EdgeRecord e;
    e.source = a.id;
    e.target = b.id;
    e.type = allowed[pick(allowed.size())];
    if (unit(rng) >= spec.untimed) {
      e.timestamp = std::uniform_int_distribution<std::int64_t>(1, spec.max_time)(rng);
    }
    // Occasional parallel edges of one type, kept apart by explicit ids.
    if (unit(rng) < 0.1) e.explicit_id = "x" + std::to_string(k);
    g.edges.push_back(std::move(e));
  }
  const auto& target = g.nodes[n - 1];
  g.feed.push_back(FeedItem{target.id, std::uniform_int_distribution<std::int64_t>(1, spec.max_time + 1)(rng), ""});
  return g;
}

namespace {

void dfs(const InteractionGraph& g, NodeIndex f, int max_len, std::vector<NodeIndex>& nodes,
         std::vector<EdgeIndex>& edges, std::set<PathShape>& out) {
  const NodeIndex v = nodes.back();
  if (v == f) {
    out.emplace(nodes, edges);
    return;
  }
  if (static_cast<int>(edges.size()) == max_len) return;
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    if (edge.source != v) continue;
    bool repeated = false;
    for (NodeIndex x : nodes) repeated = repeated || x == edge.target;
    if (repeated) continue;
    nodes.push_back(edge.target);
    edges.push_back(e);
    dfs(g, f, max_len, nodes, edges, out);
    edges.pop_back();
    nodes.pop_back();
  }
}

}  // namespace

std::set<PathShape> oracle_paths(const InteractionGraph& g, NodeIndex u, NodeIndex f,
                                 int max_len, std::int64_t seen_at) {
  std::set<PathShape> all;
  std::vector<NodeIndex> nodes{u};
  std::vector<EdgeIndex> edges;
  if (u != f) dfs(g, f, max_len, nodes, edges, all);
  std::set<PathShape> valid;
  for (const auto& shape : all) {
    bool ok = true;
    for (EdgeIndex e : shape.second) {
      const auto& ts = g.edge(e).timestamp;
      if (ts && !(*ts < seen_at)) ok = false;
    }
    if (ok) valid.insert(shape);
  }
  return valid;
}

std::set<PathShape> shapes(const std::vector<ExplanationPath>& paths) {
  std::set<PathShape> out;
  for (const auto& p : paths) out.emplace(p.nodes, p.edges);
  return out;
}

ExplanationPath make_path(const InteractionGraph& g, const std::vector<std::string>& nodes,
                          const std::vector<std::string>& edge_types) {
  ExplanationPath p;
  for (const auto& id : nodes) p.nodes.push_back(g.require(id));
  for (std::size_t i = 0; i < edge_types.size(); ++i) {
    const auto type = g.find_edge_type(edge_types[i]);
    if (!type) throw PathError("no edge type " + edge_types[i]);
    bool found = false;
    for (EdgeIndex e : g.out_edges(p.nodes[i])) {
      if (g.edge(e).type == *type && g.edge(e).target == p.nodes[i + 1]) {
        p.edges.push_back(e);
        found = true;
        break;
      }
    }
    if (!found) throw PathError("no edge " + nodes[i] + " " + edge_types[i] + " " + nodes[i + 1]);
  }
  p.id = path_id(g, p.nodes, p.edges);
  return p;
}

std::shared_ptr<const FeatureLayout> plain_layout(std::size_t dim) {
  auto l = std::make_shared<FeatureLayout>();
  for (std::size_t i = 0; i < dim; ++i) {
    l->names.push_back("pattern.f" + std::to_string(i));
    l->groups.push_back(FeatureGroup::pattern);
  }
  return l;
}

std::vector<PreferencePair> planted_pairs(const std::vector<double>& w, std::size_t count,
                                          std::uint64_t seed, Aspect aspect) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto layout = plain_layout(w.size());
  std::vector<PreferencePair> out;
  std::size_t serial = 0;
  while (out.size() < count) {
    std::vector<double> a(w.size()), b(w.size());
    double margin = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      a[k] = normal(rng);
      b[k] = normal(rng);
      margin += w[k] * (a[k] - b[k]);
    }
    if (std::abs(margin) < 1.0) continue;
    if (margin < 0.0) std::swap(a, b);
    const std::string id = std::to_string(serial++);
    out.push_back(PreferencePair{"pp" + id, {"a" + id, {a, layout}}, {"b" + id, {b, layout}},
                                 aspect, "planted", 0});
  }
  return out;
}

Preferences total_order_judgments(const std::vector<std::string>& ids) {
  Preferences out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) out.emplace_back(ids[i], ids[j]);
  }
  return out;
}

Preferences four_of_five_judgments() {
  // a > b > c > d fully judged: triplets abc, abd, acd, bcd, all consistent.
  Preferences out = total_order_judgments({"a", "b", "c", "d"});
  // x > y > z > x: one cyclic triplet.
  out.insert(out.end(), {{"x", "y"}, {"y", "z"}, {"z", "x"}});
  // p > q and q > r leave pr unjudged; s > t is a lone pair.
  out.insert(out.end(), {{"p", "q"}, {"q", "r"}, {"s", "t"}});
  return out;
}

int run_command(const std::string& command) {
  const int status = std::system((command + " >/dev/null 2>&1").c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

}  // namespace fairy::testing
