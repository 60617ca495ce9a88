#pragma once

#include <compare>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "fairy/io.hpp"

namespace fairy {

/// Suffix marking a synthesized inverse edge type ("follows⁻¹").
inline constexpr std::string_view kInverseMarker = "⁻¹";

bool is_inverse_type(std::string_view edge_type);
/// "t" -> "t⁻¹" and "t⁻¹" -> "t".
std::string invert_type(std::string_view edge_type);
/// Strips the inverse marker if present.
std::string base_type(std::string_view edge_type);

struct Triple {
  std::string source_type;
  std::string edge_type;
  std::string target_type;

  auto operator<=>(const Triple&) const = default;
};

/// Logical schema of one platform: node/edge types and the permitted
/// (source type, action, target type) relationships.
///
/// Besides the type sets, a schema names the roles that feature extraction
/// relies on: which node type is a platform member, which node types form
/// the category taxonomy, and which edge types encode taxonomy membership and
/// social following.
struct Schema {
  std::string platform;
  std::set<std::string> node_types;
  std::set<std::string> edge_types;
  std::set<Triple> triples;
  std::set<std::string> repeatable;

  std::string user_type = "user";
  std::set<std::string> category_types = {"category"};
  std::string taxonomy_edge = "belongs-to";
  std::string follow_edge = "follows";

  /// Throws SchemaError when an invariant does not hold.
  void validate() const;

  bool permits(std::string_view source_type, std::string_view edge_type,
               std::string_view target_type) const;

  bool is_category_type(std::string_view node_type) const {
    return category_types.contains(std::string(node_type));
  }
  /// Content items are every node type that is neither a user nor a category.
  bool is_item_type(std::string_view node_type) const {
    return node_type != user_type && !is_category_type(node_type);
  }

  /// Forward edge types a user may perform (sorted).
  std::set<std::string> user_action_types() const;

  bool operator==(const Schema&) const = default;
};

Schema parse_schema(const Json& doc);
Json to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);

}  // namespace fairy
