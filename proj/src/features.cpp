#include "fairy/features.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <limits>
#include <sstream>

#include "fairy/error.hpp"

namespace fairy {

const char* group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::user: return "user";
    case FeatureGroup::category: return "category";
    case FeatureGroup::item: return "item";
    case FeatureGroup::instance: return "instance";
    case FeatureGroup::pattern: return "pattern";
  }
  return "?";
}

std::optional<FeatureGroup> parse_group(std::string_view name) {
  for (FeatureGroup g : kAllGroups) {
    if (name == group_name(g)) return g;
  }
  return std::nullopt;
}

std::optional<std::size_t> FeatureLayout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

double FeatureVector::operator[](std::string_view name) const {
  const auto i = layout->index_of(name);
  if (!i) throw FeatureError("no feature named '" + std::string(name) + "'");
  return values[*i];
}

std::optional<FeatureGroup> group_of_feature(std::string_view name) {
  const auto dot = name.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto prefix = name.substr(0, dot);
  if (prefix != "present") return parse_group(prefix);
  const auto rest = name.substr(dot + 1);
  if (rest == "similarity" || rest == "recency") return FeatureGroup::instance;
  return parse_group(rest);
}

FeatureLayout layout_from_names(std::vector<std::string> names) {
  FeatureLayout l;
  for (auto& n : names) {
    auto g = group_of_feature(n);
    if (!g) throw FeatureError("unknown feature column '" + n + "'");
    l.groups.push_back(*g);
    l.names.push_back(std::move(n));
  }
  return l;
}

namespace {

const char* const kEdgeCategories[] = {"user-user", "user-content", "content-content"};

}  // namespace

FeatureLayout make_layout(const Schema& schema, const FeatureConfig& config) {
  FeatureLayout l;
  auto add = [&](std::string name, FeatureGroup g) {
    l.names.push_back(std::move(name));
    l.groups.push_back(g);
  };
  add("user.link_ratio", FeatureGroup::user);
  for (const auto& t : schema.user_action_types()) add("user.activity." + t, FeatureGroup::user);
  add("category.popularity", FeatureGroup::category);
  add("category.depth", FeatureGroup::category);
  add("category.child_count", FeatureGroup::category);
  add("item.specificity", FeatureGroup::item);
  add("item.engagement", FeatureGroup::item);
  add("instance.sim_item", FeatureGroup::instance);
  add("instance.sim_user", FeatureGroup::instance);
  add("instance.length", FeatureGroup::instance);
  add("instance.recency", FeatureGroup::instance);
  if (!schema.repeatable.empty()) add("instance.mean_edge_weight", FeatureGroup::instance);
  add("pattern.frequency", FeatureGroup::pattern);
  add("pattern.confidence", FeatureGroup::pattern);
  if (config.edge_category_counts) {
    for (const char* c : kEdgeCategories) add(std::string("pattern.count.") + c, FeatureGroup::pattern);
  } else {
    for (const auto& t : schema.edge_types) add("pattern.count." + t, FeatureGroup::pattern);
  }
  if (config.node_type_counts) {
    for (const auto& t : schema.node_types) add("pattern.node_count." + t, FeatureGroup::pattern);
  }
  add("present.user", FeatureGroup::user);
  add("present.category", FeatureGroup::category);
  add("present.item", FeatureGroup::item);
  add("present.similarity", FeatureGroup::instance);
  add("present.recency", FeatureGroup::instance);
  return l;
}

std::pair<FeatureLayout, std::vector<std::size_t>> mask_layout(
    const FeatureLayout& layout, const std::vector<FeatureGroup>& enabled) {
  FeatureLayout out;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (std::find(enabled.begin(), enabled.end(), layout.groups[i]) == enabled.end()) continue;
    out.names.push_back(layout.names[i]);
    out.groups.push_back(layout.groups[i]);
    kept.push_back(i);
  }
  return {std::move(out), std::move(kept)};
}

Featurizer::Featurizer(const InteractionGraph& g, const PatternStats& stats,
                       SimilarityProviders providers, FeatureConfig config)
    : g_(g),
      stats_(stats),
      providers_(std::move(providers)),
      config_(std::move(config)),
      layout_(std::make_shared<const FeatureLayout>(make_layout(g.schema(), config_))) {
  if (!providers_.item || !providers_.user) {
    throw FeatureError("featurizer needs item and user similarity providers");
  }
  for (const auto& t : g.schema().user_action_types()) action_types_.push_back(*g.find_edge_type(t));
  base_edge_types_.assign(g.schema().edge_types.begin(), g.schema().edge_types.end());

  const std::size_t n = g.node_count();
  counters_.resize(n);
  activity_.resize(n);
  std::vector<NodeIndex> category_mark(n, kNoNode);
  std::vector<NodeIndex> user_mark(n, kNoNode);
  const TypeId follow = g.follow_type();
  const TypeId taxonomy = g.taxonomy_type();
  for (NodeIndex v = 0; v < n; ++v) {
    NodeCounters& c = counters_[v];
    if (g.is_user(v)) activity_[v].assign(action_types_.size(), 0.0);
    for (EdgeIndex e : g.out_edges(v)) {
      const Edge& edge = g.edge(e);
      const NodeIndex w = edge.target;
      if (g.is_user(w) && user_mark[w] != v) {
        user_mark[w] = v;
        c.distinct_users += 1;
      }
      if (g.has_follow_type() && g.is_user(w)) {
        if (edge.type == (follow | 1)) c.followers += 1;
        if (edge.type == follow && g.is_user(v)) c.followees += 1;
      }
      if (g.has_taxonomy_type()) {
        if (edge.type == (taxonomy | 1)) {
          if (g.is_category(w)) {
            c.children += 1;
          } else {
            c.member_items += 1;
          }
        }
        if (edge.type == taxonomy && g.is_category(w) && category_mark[w] != v) {
          category_mark[w] = v;
          c.categories += 1;
        }
      }
      if (g.is_user(v) && !edge.is_inverse()) {
        for (std::size_t k = 0; k < action_types_.size(); ++k) {
          if (edge.type == action_types_[k]) activity_[v][k] += 1;
        }
      }
    }
  }

  // Depth: shortest distance from any root, walking parent -> child.
  depth_.assign(n, -1);
  std::deque<NodeIndex> queue;
  for (NodeIndex v = 0; v < n; ++v) {
    if (!g.is_category(v)) continue;
    bool has_parent = false;
    if (g.has_taxonomy_type()) {
      for (EdgeIndex e : g.out_edges(v)) {
        const Edge& edge = g.edge(e);
        if (edge.type == taxonomy && g.is_category(edge.target)) has_parent = true;
      }
    }
    if (!has_parent) {
      depth_[v] = 0;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    for (EdgeIndex e : g.out_edges(v)) {
      const Edge& edge = g.edge(e);
      if (edge.type != (taxonomy | 1) || !g.is_category(edge.target)) continue;
      if (depth_[edge.target] >= 0) continue;
      depth_[edge.target] = depth_[v] + 1;
      queue.push_back(edge.target);
    }
  }
}

double Featurizer::link_ratio(NodeIndex user) const {
  const double followers = g_.numeric_attribute(user, "followers").value_or(counters_[user].followers);
  const double followees = g_.numeric_attribute(user, "followees").value_or(counters_[user].followees);
  return followers / std::max(followees, 1.0);
}

int Featurizer::category_depth(NodeIndex category) const {
  if (!g_.is_category(category)) {
    throw FeatureError("'" + g_.node(category).id + "' is not a category");
  }
  if (depth_[category] < 0) {
    throw FeatureError("category '" + g_.node(category).id + "' is not connected to a taxonomy root");
  }
  return depth_[category];
}

namespace {

template <typename Pred>
std::vector<NodeIndex> internal_nodes(const ExplanationPath& path, Pred pred) {
  std::vector<NodeIndex> out;
  for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
    if (pred(path.nodes[i])) out.push_back(path.nodes[i]);
  }
  return out;
}

}  // namespace

UserFeatures Featurizer::user_features(const ExplanationPath& path) const {
  UserFeatures f;
  f.activity.assign(action_types_.size(), 0.0);
  const auto users = internal_nodes(path, [&](NodeIndex n) { return g_.is_user(n); });
  if (users.empty()) return f;
  f.present = true;
  for (NodeIndex u : users) {
    f.link_ratio += link_ratio(u);
    for (std::size_t k = 0; k < f.activity.size(); ++k) {
      const double a = activity_[u][k];
      f.activity[k] = config_.user_activity_max ? std::max(f.activity[k], a) : f.activity[k] + a;
    }
  }
  const double count = static_cast<double>(users.size());
  f.link_ratio /= count;
  if (!config_.user_activity_max) {
    for (double& a : f.activity) a /= count;
  }
  return f;
}

CategoryFeatures Featurizer::category_features(const ExplanationPath& path) const {
  CategoryFeatures f;
  const auto cats = internal_nodes(path, [&](NodeIndex n) { return g_.is_category(n); });
  if (cats.empty()) return f;
  f.present = true;
  for (NodeIndex c : cats) {
    double popularity = 0.0;
    if (auto attr = g_.numeric_attribute(c, config_.popularity_attribute)) {
      popularity = *attr;
    } else if (config_.popularity_attribute == "followers") {
      popularity = counters_[c].followers;
    } else if (config_.popularity_attribute == "posts") {
      popularity = counters_[c].member_items;
    }
    f.popularity += popularity;
    f.depth += category_depth(c);
    f.child_count += counters_[c].children;
  }
  const double count = static_cast<double>(cats.size());
  f.popularity /= count;
  f.depth /= count;
  f.child_count /= count;
  return f;
}

ItemFeatures Featurizer::item_features(const ExplanationPath& path) const {
  ItemFeatures f;
  const auto items = internal_nodes(path, [&](NodeIndex n) { return g_.is_item(n); });
  if (items.empty()) return f;
  f.present = true;
  for (NodeIndex i : items) {
    f.specificity += counters_[i].categories;
    f.engagement += counters_[i].distinct_users;
  }
  const double count = static_cast<double>(items.size());
  f.specificity /= count;
  f.engagement /= count;
  return f;
}

InstanceFeatures Featurizer::instance_features(const ExplanationPath& path,
                                               const FeedItem& item) const {
  if (path.length() < 1) throw FeatureError("path has no edges");
  InstanceFeatures f;
  const NodeIndex u = path.nodes.front();
  const NodeIndex target = path.nodes.back();
  f.length = static_cast<double>(path.length());
  if (path.length() > 1) {
    f.similarity_present = true;
    for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
      f.sim_item += providers_.item->similarity(path.nodes[i], target);
      f.sim_user += providers_.user->similarity(path.nodes[i], u);
    }
    const double internal = static_cast<double>(path.length() - 1);
    f.sim_item /= internal;
    f.sim_user /= internal;
  }
  std::optional<double> recency;
  double weight_sum = 0.0;
  for (EdgeIndex e : path.edges) {
    const Edge& edge = g_.edge(e);
    weight_sum += edge.weight;
    if (edge.timestamp) {
      const double r = static_cast<double>(item.seen_at - *edge.timestamp);
      recency = recency ? std::min(*recency, r) : r;
    }
  }
  f.recency_present = recency.has_value();
  f.recency = recency.value_or(config_.recency_horizon);
  if (!g_.schema().repeatable.empty()) {
    f.mean_edge_weight = weight_sum / static_cast<double>(path.length());
  }
  return f;
}

PatternFeatures Featurizer::pattern_features(const ExplanationPath& path) const {
  PatternFeatures f;
  const std::string key = pattern_of(path, g_).to_string();
  f.frequency = stats_.frequency(key);
  f.confidence = stats_.confidence(key);
  if (config_.edge_category_counts) {
    f.edge_type_counts.assign(3, 0.0);
    for (EdgeIndex e : path.edges) {
      const Edge& edge = g_.edge(e);
      const int users = int(g_.is_user(edge.source)) + int(g_.is_user(edge.target));
      f.edge_type_counts[users == 2 ? 0 : users == 1 ? 1 : 2] += 1;
    }
  } else {
    f.edge_type_counts.assign(base_edge_types_.size(), 0.0);
    for (EdgeIndex e : path.edges) {
      const TypeId forward = g_.edge(e).type & ~TypeId{1};
      // Forward ids are 2k in sorted schema order.
      f.edge_type_counts[forward / 2] += 1;
    }
  }
  if (config_.node_type_counts) {
    f.node_type_counts.assign(g_.node_type_count(), 0.0);
    for (NodeIndex n : path.nodes) f.node_type_counts[g_.node(n).type] += 1;
  }
  return f;
}

FeatureVector Featurizer::featurize(const ExplanationPath& path, const FeedItem& item) const {
  const auto user = user_features(path);
  const auto category = category_features(path);
  const auto items = item_features(path);
  const auto instance = instance_features(path, item);
  const auto pattern = pattern_features(path);

  FeatureVector v;
  v.layout = layout_;
  auto& x = v.values;
  x.reserve(layout_->size());
  x.push_back(user.link_ratio);
  x.insert(x.end(), user.activity.begin(), user.activity.end());
  x.push_back(category.popularity);
  x.push_back(category.depth);
  x.push_back(category.child_count);
  x.push_back(items.specificity);
  x.push_back(items.engagement);
  x.push_back(instance.sim_item);
  x.push_back(instance.sim_user);
  x.push_back(instance.length);
  x.push_back(instance.recency);
  if (instance.mean_edge_weight) x.push_back(*instance.mean_edge_weight);
  x.push_back(pattern.frequency);
  x.push_back(pattern.confidence);
  x.insert(x.end(), pattern.edge_type_counts.begin(), pattern.edge_type_counts.end());
  x.insert(x.end(), pattern.node_type_counts.begin(), pattern.node_type_counts.end());
  x.push_back(user.present ? 1.0 : 0.0);
  x.push_back(category.present ? 1.0 : 0.0);
  x.push_back(items.present ? 1.0 : 0.0);
  x.push_back(instance.similarity_present ? 1.0 : 0.0);
  x.push_back(instance.recency_present ? 1.0 : 0.0);
  if (x.size() != layout_->size()) {
    throw FeatureError("internal error: feature vector does not match its layout");
  }
  return v;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_feature_csv(const FeatureLayout& layout, const std::vector<FeatureRow>& rows,
                       std::ostream& out) {
  out << "path_id,pair";
  for (const auto& n : layout.names) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    if (r.pair.find(',') != std::string::npos) {
      throw FeatureError("pair key '" + r.pair + "' contains a comma");
    }
    out << r.path_id << ',' << r.pair;
    for (double v : r.features.values) out << ',' << format_double(v);
    out << '\n';
  }
}

void FeatureTable::add(FeatureRow row) {
  if (row.features.layout && *row.features.layout != *layout_) {
    throw FeatureError("feature row " + row.path_id + " has a different layout");
  }
  if (row.features.values.size() != layout_->size()) {
    throw FeatureError("feature row " + row.path_id + " has the wrong width");
  }
  row.features.layout = layout_;
  index_.emplace(row.path_id, rows_.size());
  rows_.push_back(std::move(row));
}

const FeatureRow* FeatureTable::find(std::string_view path_id, std::string_view pair) const {
  const FeatureRow* best = nullptr;
  auto [lo, hi] = index_.equal_range(std::string(path_id));
  for (auto it = lo; it != hi; ++it) {
    const FeatureRow& r = rows_[it->second];
    if (!pair.empty() && r.pair != pair) continue;
    if (!best || &r < best) best = &r;
  }
  return best;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FeatureError(path.string() + ": empty feature file");
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "path_id" || header[1] != "pair") {
    throw FeatureError(path.string() + ": header must start with path_id,pair");
  }
  std::shared_ptr<const FeatureLayout> layout;
  try {
    layout = std::make_shared<const FeatureLayout>(
        layout_from_names(std::vector<std::string>(header.begin() + 2, header.end())));
  } catch (const FeatureError& e) {
    throw FeatureError(path.string() + ": " + e.what());
  }
  FeatureTable table(layout);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw FeatureError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " cells");
    }
    FeatureRow row{cells[0], cells[1], FeatureVector{{}, layout}};
    row.features.values.reserve(layout->size());
    for (std::size_t i = 2; i < cells.size(); ++i) {
      try {
        row.features.values.push_back(std::stod(cells[i]));
      } catch (const std::exception&) {
        throw FeatureError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                           cells[i] + "'");
      }
    }
    table.add(std::move(row));
  }
  return table;
}

}  // namespace fairy
