#include "fairy/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

namespace fairy {

PairSample sample_random_pairs(std::size_t path_count, std::size_t n, std::uint64_t seed) {
  if (path_count < 2) throw ConfigError("need at least two paths to sample pairs");
  PairSample out;
  const std::uint64_t total = static_cast<std::uint64_t>(path_count) * (path_count - 1) / 2;
  // Pair number k enumerates (0,1), (0,2), ..., (1,2), ... row by row.
  auto decode = [&](std::uint64_t k) {
    std::size_t i = 0;
    std::uint64_t row = path_count - 1;
    while (k >= row) {
      k -= row;
      ++i;
      --row;
    }
    return IndexPair{i, i + 1 + static_cast<std::size_t>(k)};
  };
  std::vector<std::uint64_t> chosen;
  if (n >= total) {
    out.short_of_request = n > total;
    chosen.resize(total);
    std::iota(chosen.begin(), chosen.end(), std::uint64_t{0});
  } else {
    // Floyd's algorithm: n distinct values from [0, total).
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> picked;
    for (std::uint64_t j = total - n; j < total; ++j) {
      std::uniform_int_distribution<std::uint64_t> dist(0, j);
      const std::uint64_t t = dist(rng);
      picked.insert(picked.contains(t) ? j : t);
    }
    chosen.assign(picked.begin(), picked.end());
    std::sort(chosen.begin(), chosen.end());
  }
  out.pairs.reserve(chosen.size());
  for (std::uint64_t k : chosen) out.pairs.push_back(decode(k));
  return out;
}

const char* sampling_name(Sampling s) {
  switch (s) {
    case Sampling::random: return "random";
    case Sampling::perturb_user: return "perturb_user";
    case Sampling::perturb_category: return "perturb_category";
    case Sampling::perturb_item: return "perturb_item";
  }
  return "?";
}

std::optional<Sampling> parse_sampling(std::string_view name) {
  for (Sampling s : {Sampling::random, Sampling::perturb_user, Sampling::perturb_category,
                     Sampling::perturb_item}) {
    if (name == sampling_name(s)) return s;
  }
  return std::nullopt;
}

namespace {

bool plays(const InteractionGraph& g, NodeIndex n, NodeRole role) {
  switch (role) {
    case NodeRole::user: return g.is_user(n);
    case NodeRole::category: return g.is_category(n);
    case NodeRole::item: return g.is_item(n);
  }
  return false;
}

template <typename Accept>
bool differs_once(const InteractionGraph& g, const ExplanationPath& a, const ExplanationPath& b,
                  Accept accepts) {
  if (a.length() != b.length()) return false;
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    if (g.edge(a.edges[i]).type != g.edge(b.edges[i]).type) return false;
  }
  std::optional<std::size_t> position;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    if (a.nodes[i] == b.nodes[i]) continue;
    if (position) return false;
    position = i;
  }
  if (!position) return false;
  const NodeIndex x = a.nodes[*position];
  const NodeIndex y = b.nodes[*position];
  return g.node(x).type == g.node(y).type && accepts(x);
}

template <typename Accept>
PairSample sample_perturbations(const std::vector<ExplanationPath>& paths,
                                const InteractionGraph& g, std::size_t n, std::uint64_t seed,
                                Accept accepts) {
  // Bucket paths by their content with one accepted position blanked out;
  // two paths share a bucket exactly when they are perturbations there.
  std::map<std::string, std::vector<std::size_t>> buckets;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& path = paths[p];
    for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
      if (!accepts(path.nodes[i])) continue;
      std::string key = std::to_string(i) + '\x1f' + g.type_name_of(path.nodes[i]);
      for (std::size_t k = 0; k < path.nodes.size(); ++k) {
        key += '\x1f';
        key += k == i ? std::string() : g.node(path.nodes[k]).id;
        if (k < path.edges.size()) {
          key += '\x1e';
          key += g.edge_type_name(g.edge(path.edges[k]).type);
        }
      }
      buckets[key].push_back(p);
    }
  }
  std::set<IndexPair> candidates;
  for (const auto& [key, members] : buckets) {
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        // Parallel edges give paths that differ in no node at all.
        if (paths[members[x]].nodes == paths[members[y]].nodes) continue;
        candidates.emplace(std::min(members[x], members[y]), std::max(members[x], members[y]));
      }
    }
  }
  PairSample out;
  std::vector<IndexPair> all(candidates.begin(), candidates.end());
  if (all.size() <= n) {
    out.short_of_request = all.size() < n;
    out.pairs = std::move(all);
    return out;
  }
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n);
  std::sort(all.begin(), all.end());
  out.pairs = std::move(all);
  return out;
}

}  // namespace

bool is_perturbation_pair(const InteractionGraph& g, const ExplanationPath& a,
                          const ExplanationPath& b, NodeRole role) {
  return differs_once(g, a, b, [&](NodeIndex n) { return plays(g, n, role); });
}

PairSample sample_perturbation_pairs(const std::vector<ExplanationPath>& paths,
                                     const InteractionGraph& g, std::string_view node_type,
                                     std::size_t n, std::uint64_t seed) {
  const auto type = g.find_node_type(node_type);
  if (!type) throw ConfigError("unknown node type '" + std::string(node_type) + "'");
  return sample_perturbations(paths, g, n, seed,
                              [&](NodeIndex x) { return g.node(x).type == *type; });
}

PairSample sample_perturbation_pairs(const std::vector<ExplanationPath>& paths,
                                     const InteractionGraph& g, NodeRole role, std::size_t n,
                                     std::uint64_t seed) {
  return sample_perturbations(paths, g, n, seed, [&](NodeIndex x) { return plays(g, x, role); });
}

TransitivityCounts transitivity_counts(
    const std::vector<std::pair<std::string, std::string>>& judgments) {
  // Net direction per unordered pair: positive means first ≻ second.
  std::map<std::pair<std::string, std::string>, int> votes;
  for (const auto& [better, worse] : judgments) {
    if (better == worse) continue;
    if (better < worse) {
      ++votes[{better, worse}];
    } else {
      --votes[{worse, better}];
    }
  }
  std::map<std::string, std::map<std::string, bool>> beats;  // beats[a][b]: a ≻ b
  for (const auto& [pair, v] : votes) {
    if (v == 0) continue;
    const auto& [a, b] = pair;
    beats[a][b] = v > 0;
    beats[b][a] = v < 0;
  }
  TransitivityCounts counts;
  for (const auto& [a, na] : beats) {
    for (auto it = na.upper_bound(a); it != na.end(); ++it) {
      const std::string& b = it->first;
      const auto& nb = beats.at(b);
      for (auto jt = nb.upper_bound(b); jt != nb.end(); ++jt) {
        const std::string& c = jt->first;
        auto ac = na.find(c);
        if (ac == na.end()) continue;
        ++counts.decidable;
        const bool ab = it->second;
        const bool bc = jt->second;
        const bool ca = !ac->second;
        const bool cyclic = (ab == bc) && (bc == ca);
        if (!cyclic) ++counts.consistent;
      }
    }
  }
  return counts;
}

double transitivity_score(const std::vector<std::pair<std::string, std::string>>& judgments) {
  return transitivity_counts(judgments).score();
}

double paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw ConfigError("paired t-test needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

ExperimentConfig parse_experiment_config(const Json& j) {
  ExperimentConfig c;
  try {
    c.label = j.value("label", c.label);
    c.split_seed = j.value("split_seed", c.split_seed);
    if (j.contains("sampling")) {
      const auto s = parse_sampling(j.at("sampling").get<std::string>());
      if (!s) throw ConfigError("unknown sampling strategy " + j.at("sampling").dump());
      c.sampling = *s;
    }
    c.eval_only = j.value("eval_only", c.eval_only);
    if (j.contains("aspects")) {
      c.aspects.clear();
      for (const auto& a : j.at("aspects")) {
        const auto aspect = parse_aspect(a.get<std::string>());
        if (!aspect) throw ConfigError("unknown aspect " + a.dump());
        c.aspects.push_back(*aspect);
      }
    }
    if (j.contains("feature_mask")) {
      std::map<FeatureGroup, bool> on;
      for (FeatureGroup g : kAllGroups) on[g] = true;
      for (const auto& [name, flag] : j.at("feature_mask").items()) {
        const auto g = parse_group(name);
        if (!g) throw ConfigError("unknown feature group '" + name + "'");
        on[*g] = flag.get<bool>();
      }
      c.groups.clear();
      for (FeatureGroup g : kAllGroups) {
        if (on[g]) c.groups.push_back(g);
      }
    }
    if (c.groups.empty()) throw ConfigError("feature mask disables every group");
    if (j.contains("c_grid")) c.c_grid = j.at("c_grid").get<std::vector<double>>();
    c.train.seed = j.value("train_seed", c.train.seed);
    c.train.max_epochs = j.value("max_epochs", c.train.max_epochs);
    c.train.tolerance = j.value("tolerance", c.train.tolerance);
    c.per_judge = j.value("per_judge", c.per_judge);
    if (j.value("espresso_center", std::string("min")) == "mean") {
      c.espresso_center = CenterRule::mean;
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

namespace {

struct PathRef {
  const ExplanationPath* path = nullptr;
  const PairPaths* pair = nullptr;
};

class PathIndex {
 public:
  explicit PathIndex(const std::vector<PairPaths>& pairs) {
    for (const auto& pp : pairs) {
      for (const auto& p : pp.paths) {
        by_pair_.emplace(pp.pair + '\x1f' + p.id_hex(), PathRef{&p, &pp});
        any_.emplace(p.id_hex(), PathRef{&p, &pp});
      }
    }
  }

  PathRef find(const std::string& id, const std::string& pair) const {
    if (!pair.empty()) {
      auto it = by_pair_.find(pair + '\x1f' + id);
      if (it != by_pair_.end()) return it->second;
    }
    auto it = any_.find(id);
    if (it == any_.end()) throw ConfigError("judged path " + id + " is not in the path dump");
    return it->second;
  }

 private:
  std::unordered_map<std::string, PathRef> by_pair_;
  std::unordered_map<std::string, PathRef> any_;
};

/// A judged pair with everything needed to score it by every method.
struct EvalPair {
  PreferencePair pref;
  PathRef better;
  PathRef worse;
};

std::vector<EvalPair> to_eval_pairs(const std::vector<Judgment>& judgments, Aspect aspect,
                                    const FeatureTable& table, const PathIndex& paths,
                                    const std::vector<std::size_t>& kept,
                                    std::shared_ptr<const FeatureLayout> layout) {
  std::vector<EvalPair> out;
  for (const auto& j : judgments) {
    if (j.aspect != aspect) continue;
    auto prefs = attach_features({j}, table, aspect);
    auto& pref = prefs.front();
    for (auto* item : {&pref.better, &pref.worse}) {
      std::vector<double> masked;
      masked.reserve(kept.size());
      for (std::size_t k : kept) masked.push_back(item->features.values[k]);
      item->features = FeatureVector{std::move(masked), layout};
    }
    out.push_back(EvalPair{std::move(pref), paths.find(j.better, j.pair),
                           paths.find(j.worse, j.pair)});
  }
  return out;
}

std::vector<PreferencePair> prefs_of(const std::vector<EvalPair>& pairs) {
  std::vector<PreferencePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.pref);
  return out;
}

class BaselineScorer {
 public:
  BaselineScorer(const InteractionGraph& g, const PatternStats& stats, CenterRule rule)
      : g_(g), stats_(stats), rw_(g), rule_(rule) {}

  double score(BaselineMethod m, const ExplanationPath& p) const {
    switch (m) {
      case BaselineMethod::pra: return pra_score(g_, p);
      case BaselineMethod::rex_global: return rex_global_score(stats_, p, g_);
      case BaselineMethod::espresso: return espresso_score(g_, p, rw_, rule_);
    }
    return 0.0;
  }

 private:
  const InteractionGraph& g_;
  const PatternStats& stats_;
  RandomWalkSimilarity rw_;
  CenterRule rule_;
};

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Trains on `pairs`' train/dev split and evaluates every method on test.
void evaluate(const ExperimentConfig& config, const std::vector<EvalPair>& pairs,
              const BaselineScorer& baselines, Aspect aspect, const std::string& judge,
              const std::vector<EvalPair>* eval_only_pool, ExperimentResults& results) {
  auto parts = split(pairs, config.split_seed);
  if (eval_only_pool) {
    // Keep the test pairs that are perturbations; training uses everything.
    std::vector<EvalPair> test;
    for (const auto& p : parts.test) {
      for (const auto& q : *eval_only_pool) {
        if (q.pref.pair_id == p.pref.pair_id) {
          test.push_back(p);
          break;
        }
      }
    }
    parts.test = std::move(test);
  }
  if (parts.test.empty()) throw ConfigError("experiment '" + config.label + "' has no test pairs");
  const auto selection =
      train_with_dev(prefs_of(parts.train), prefs_of(parts.dev), config.c_grid, config.train);
  const auto fairy_correct = pairwise_correctness(selection.model, prefs_of(parts.test));

  std::vector<std::pair<std::string, std::vector<double>>> baseline_correct;
  for (BaselineMethod m : kBaselines) {
    std::vector<double> correct;
    for (const auto& p : parts.test) {
      const double sb = baselines.score(m, *p.better.path);
      const double sw = baselines.score(m, *p.worse.path);
      correct.push_back(prefer(sb, p.pref.better.path_id, sw, p.pref.worse.path_id) ==
                                Choice::first
                            ? 1.0
                            : 0.0);
    }
    baseline_correct.emplace_back(method_name(m), std::move(correct));
  }
  const auto strongest = std::max_element(
      baseline_correct.begin(), baseline_correct.end(),
      [](const auto& a, const auto& b) { return mean(a.second) < mean(b.second); });
  std::optional<double> p_value;
  if (fairy_correct.size() >= 2) p_value = paired_t_test(fairy_correct, strongest->second);
  results.rows.push_back(MethodResult{kFairy, aspect, judge, mean(fairy_correct),
                                      fairy_correct.size(), p_value});
  for (const auto& [name, correct] : baseline_correct) {
    results.rows.push_back(MethodResult{name, aspect, judge, mean(correct), correct.size(), {}});
  }
}

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& config, const ExperimentData& data) {
  if (!data.graph || !data.features || !data.stats) {
    throw ConfigError("experiment data is incomplete");
  }
  if (config.groups.empty()) throw ConfigError("feature mask disables every group");
  const InteractionGraph& g = *data.graph;
  ExperimentResults results;
  results.label = config.label;
  results.sampling = config.sampling;
  for (FeatureGroup grp : config.groups) results.groups.emplace_back(group_name(grp));

  auto [masked_layout, kept] = mask_layout(data.features->layout(), config.groups);
  const auto layout = std::make_shared<const FeatureLayout>(std::move(masked_layout));
  const PathIndex paths(data.pairs);
  const BaselineScorer baselines(g, *data.stats, config.espresso_center);

  for (Aspect aspect : config.aspects) {
    auto pairs = to_eval_pairs(data.judgments, aspect, *data.features, paths, kept, layout);

    std::vector<std::pair<std::string, std::string>> by_judge_order;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> per_judge;
    for (const auto& p : pairs) {
      per_judge[p.pref.judge].emplace_back(p.pref.better.path_id, p.pref.worse.path_id);
    }
    TransitivityCounts total;
    for (const auto& [judge, js] : per_judge) {
      const auto c = transitivity_counts(js);
      total.consistent += c.consistent;
      total.decidable += c.decidable;
    }
    results.transitivity[aspect] = total;

    if (aspect == Aspect::surprisal) {
      std::size_t differing = 0, shorter = 0;
      for (const auto& p : pairs) {
        const auto lb = p.better.path->length();
        const auto lw = p.worse.path->length();
        if (lb == lw) continue;
        ++differing;
        if (lb < lw) ++shorter;
      }
      if (differing > 0) {
        results.surprising_shorter = static_cast<double>(shorter) / static_cast<double>(differing);
      }
    }

    std::vector<EvalPair> perturbed;
    if (config.sampling != Sampling::random) {
      const NodeRole role = config.sampling == Sampling::perturb_user       ? NodeRole::user
                            : config.sampling == Sampling::perturb_category ? NodeRole::category
                                                                            : NodeRole::item;
      for (const auto& p : pairs) {
        if (p.better.pair == p.worse.pair &&
            is_perturbation_pair(g, *p.better.path, *p.worse.path, role)) {
          perturbed.push_back(p);
        }
      }
    }
    const bool perturb = config.sampling != Sampling::random;
    const auto& pool = perturb && !config.eval_only ? perturbed : pairs;
    const auto* eval_pool = perturb && config.eval_only ? &perturbed : nullptr;
    evaluate(config, pool, baselines, aspect, "", eval_pool, results);

    if (config.per_judge) {
      std::map<std::string, std::vector<EvalPair>> groups;
      for (const auto& p : pool) groups[p.pref.judge].push_back(p);
      for (const auto& [judge, js] : groups) {
        if (js.size() < 10) continue;
        try {
          evaluate(config, js, baselines, aspect, judge.empty() ? "(anonymous)" : judge,
                   eval_pool, results);
        } catch (const ConfigError&) {
          // Too few perturbed test pairs for this judge.
        }
      }
    }
  }
  return results;
}

namespace {

std::string format_number(double v, int precision = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

void write_results_csv(const std::vector<ExperimentResults>& results, std::ostream& out) {
  out << "label,sampling,groups,aspect,method,judge,accuracy,test_pairs,p_value\n";
  for (const auto& r : results) {
    for (const auto& row : r.rows) {
      out << r.label << ',' << sampling_name(r.sampling) << ',' << join(r.groups, "+") << ','
          << aspect_name(row.aspect) << ',' << row.method << ',' << row.judge << ','
          << format_number(row.accuracy, 6) << ',' << row.test_pairs << ','
          << (row.p_value ? format_number(*row.p_value, 6) : std::string()) << '\n';
    }
  }
}

std::string format_results(const std::vector<ExperimentResults>& results) {
  std::ostringstream out;
  const std::vector<std::string> methods{kFairy, "espresso", "rex_global", "pra"};
  char line[256];
  for (const auto& r : results) {
    out << "== " << r.label << " (sampling: " << sampling_name(r.sampling)
        << ", groups: " << join(r.groups, "+") << ")\n";
    std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s %8s\n", "Aspect", "FAIRY",
                  "ESPRESSO", "REX", "PRA", "pairs");
    out << line;
    for (Aspect a : {Aspect::relevance, Aspect::surprisal}) {
      std::vector<std::string> cells;
      std::size_t test_pairs = 0;
      bool any = false;
      for (const auto& m : methods) {
        std::string cell = "-";
        for (const auto& row : r.rows) {
          if (row.aspect != a || row.method != m || !row.judge.empty()) continue;
          cell = format_number(100.0 * row.accuracy, 2);
          if (row.p_value && *row.p_value <= kSignificance) cell += "*";
          test_pairs = row.test_pairs;
          any = true;
        }
        cells.push_back(cell);
      }
      if (!any) continue;
      std::string name = aspect_name(a);
      name[0] = static_cast<char>(std::toupper(name[0]));
      std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s %8zu\n", name.c_str(),
                    cells[0].c_str(), cells[1].c_str(), cells[2].c_str(), cells[3].c_str(),
                    test_pairs);
      out << line;
    }
    std::vector<std::pair<double, const MethodResult*>> judges;
    for (const auto& row : r.rows) {
      if (!row.judge.empty() && row.method == kFairy) judges.emplace_back(row.accuracy, &row);
    }
    if (!judges.empty()) {
      std::stable_sort(judges.begin(), judges.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      out << "per-judge models (descending FAIRY accuracy):\n";
      int id = 1;
      for (const auto& [acc, row] : judges) {
        out << "  user " << id++ << " [" << row->judge << ", " << aspect_name(row->aspect)
            << "]: " << format_number(100.0 * acc, 2) << '\n';
      }
    }
    for (const auto& [aspect, counts] : r.transitivity) {
      out << "transitivity (" << aspect_name(aspect) << "): "
          << (counts.decidable ? format_number(counts.score(), 4) : std::string("n/a")) << " over "
          << counts.decidable << " triplets\n";
    }
    if (r.surprising_shorter) {
      out << "more surprising path is the shorter one: "
          << format_number(100.0 * *r.surprising_shorter, 2) << "%\n";
    }
    out << "* p <= " << kSignificance << " (two-tailed paired t-test vs strongest baseline)\n\n";
  }
  return out.str();
}

}  // namespace fairy
