#include "fairy/schema.hpp"

#include "fairy/error.hpp"

namespace fairy {

bool is_inverse_type(std::string_view edge_type) {
  return edge_type.size() >= kInverseMarker.size() &&
         edge_type.substr(edge_type.size() - kInverseMarker.size()) == kInverseMarker;
}

std::string base_type(std::string_view edge_type) {
  if (is_inverse_type(edge_type)) {
    edge_type.remove_suffix(kInverseMarker.size());
  }
  return std::string(edge_type);
}

std::string invert_type(std::string_view edge_type) {
  if (is_inverse_type(edge_type)) return base_type(edge_type);
  return std::string(edge_type) + std::string(kInverseMarker);
}

namespace {

void check_name(const std::string& name, const char* what) {
  if (name.empty()) throw SchemaError(std::string("empty ") + what + " name");
  if (name.find(kInverseMarker) != std::string::npos) {
    throw SchemaError(std::string(what) + " '" + name +
                      "' contains the reserved inverse marker");
  }
}

std::set<std::string> string_set(const Json& doc, const char* key, bool required) {
  std::set<std::string> out;
  if (!doc.contains(key)) {
    if (required) throw SchemaError(std::string("schema is missing '") + key + "'");
    return out;
  }
  const Json& arr = doc.at(key);
  if (!arr.is_array()) throw SchemaError(std::string("'") + key + "' must be an array");
  for (const Json& v : arr) {
    if (!v.is_string()) throw SchemaError(std::string("'") + key + "' entries must be strings");
    if (!out.insert(v.get<std::string>()).second) {
      throw SchemaError("duplicate name '" + v.get<std::string>() + "' in '" + key + "'");
    }
  }
  return out;
}

}  // namespace

void Schema::validate() const {
  if (node_types.empty()) throw SchemaError("schema declares no node types");
  if (edge_types.empty()) throw SchemaError("schema declares no edge types");
  for (const auto& t : node_types) check_name(t, "node type");
  for (const auto& t : edge_types) check_name(t, "edge type");
  for (const auto& tr : triples) {
    if (!node_types.contains(tr.source_type)) {
      throw SchemaError("triple references undeclared node type '" + tr.source_type + "'");
    }
    if (!edge_types.contains(tr.edge_type)) {
      throw SchemaError("triple references undeclared edge type '" + tr.edge_type + "'");
    }
    if (!node_types.contains(tr.target_type)) {
      throw SchemaError("triple references undeclared node type '" + tr.target_type + "'");
    }
  }
  for (const auto& t : repeatable) {
    if (!edge_types.contains(t)) {
      throw SchemaError("repeatable edge type '" + t + "' is not declared");
    }
  }
  if (!node_types.contains(user_type)) {
    throw SchemaError("user type '" + user_type + "' is not declared");
  }
  for (const auto& t : category_types) {
    if (!node_types.contains(t)) {
      throw SchemaError("category type '" + t + "' is not declared");
    }
  }
}

bool Schema::permits(std::string_view source_type, std::string_view edge_type,
                     std::string_view target_type) const {
  return triples.contains(Triple{std::string(source_type), std::string(edge_type),
                                 std::string(target_type)});
}

std::set<std::string> Schema::user_action_types() const {
  std::set<std::string> out;
  for (const auto& tr : triples) {
    if (tr.source_type == user_type) out.insert(tr.edge_type);
  }
  return out;
}

Schema parse_schema(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("schema must be a JSON object");
  Schema s;
  try {
    s.platform = doc.value("platform", std::string());
  } catch (const Json::exception&) {
    throw SchemaError("'platform' must be a string");
  }
  s.node_types = string_set(doc, "node_types", true);
  s.edge_types = string_set(doc, "edge_types", true);
  s.repeatable = string_set(doc, "repeatable", false);
  if (!doc.contains("triples") || !doc.at("triples").is_array()) {
    throw SchemaError("schema is missing the 'triples' array");
  }
  for (const Json& t : doc.at("triples")) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
        !t[2].is_string()) {
      throw SchemaError("each triple must be a 3-element array of strings");
    }
    s.triples.insert(Triple{t[0].get<std::string>(), t[1].get<std::string>(),
                            t[2].get<std::string>()});
  }
  if (doc.contains("user_type")) s.user_type = doc.at("user_type").get<std::string>();
  if (doc.contains("category_types")) s.category_types = string_set(doc, "category_types", true);
  if (doc.contains("taxonomy_edge")) s.taxonomy_edge = doc.at("taxonomy_edge").get<std::string>();
  if (doc.contains("follow_edge")) s.follow_edge = doc.at("follow_edge").get<std::string>();
  s.validate();
  return s;
}

Json to_json(const Schema& s) {
  Json triples = Json::array();
  for (const auto& t : s.triples) {
    triples.push_back({t.source_type, t.edge_type, t.target_type});
  }
  return Json{{"platform", s.platform},
              {"node_types", s.node_types},
              {"edge_types", s.edge_types},
              {"triples", triples},
              {"repeatable", s.repeatable},
              {"user_type", s.user_type},
              {"category_types", s.category_types},
              {"taxonomy_edge", s.taxonomy_edge},
              {"follow_edge", s.follow_edge}};
}

Schema load_schema(const std::filesystem::path& path) {
  try {
    return parse_schema(read_json_file(path));
  } catch (const IoError& e) {
    throw SchemaError(e.what());
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace fairy
