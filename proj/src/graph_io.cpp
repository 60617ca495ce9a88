#include "fairy/graph_io.hpp"

#include "fairy/error.hpp"

namespace fairy {

namespace {

std::string attribute_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

NodeRecord parse_node_record(const Json& j) {
  if (!j.is_object()) throw GraphError("node record must be a JSON object");
  NodeRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.type = j.at("type").get<std::string>();
    r.weight = j.value("weight", 0.0);
    r.is_user = j.value("is_user", false);
    if (j.contains("attrs") && !j.at("attrs").is_null()) {
      for (const auto& [k, v] : j.at("attrs").items()) r.attributes[k] = attribute_text(v);
    }
  } catch (const Json::exception& e) {
    throw GraphError(std::string("malformed node record: ") + e.what());
  }
  return r;
}

EdgeRecord parse_edge_record(const Json& j) {
  if (!j.is_object()) throw GraphError("edge record must be a JSON object");
  EdgeRecord r;
  try {
    r.source = j.at("src").get<std::string>();
    r.target = j.at("dst").get<std::string>();
    r.type = j.at("type").get<std::string>();
    r.weight = j.value("weight", 1.0);
    if (j.contains("ts") && !j.at("ts").is_null()) r.timestamp = j.at("ts").get<std::int64_t>();
    if (j.contains("id") && !j.at("id").is_null()) r.explicit_id = j.at("id").get<std::string>();
  } catch (const Json::exception& e) {
    throw GraphError(std::string("malformed edge record: ") + e.what());
  }
  return r;
}

Json to_json(const NodeRecord& r) {
  Json attrs = Json::object();
  for (const auto& [k, v] : r.attributes) attrs[k] = v;
  return Json{{"id", r.id}, {"type", r.type}, {"weight", r.weight}, {"attrs", attrs},
              {"is_user", r.is_user}};
}

Json to_json(const EdgeRecord& r) {
  Json j{{"src", r.source}, {"dst", r.target}, {"type", r.type}, {"weight", r.weight},
         {"ts", r.timestamp ? Json(*r.timestamp) : Json(nullptr)}};
  if (!r.explicit_id.empty()) j["id"] = r.explicit_id;
  return j;
}

std::vector<NodeRecord> read_node_file(const std::filesystem::path& path) {
  std::vector<NodeRecord> out;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    try {
      out.push_back(parse_node_record(j));
    } catch (const GraphError& e) {
      throw GraphError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

std::vector<EdgeRecord> read_edge_file(const std::filesystem::path& path) {
  std::vector<EdgeRecord> out;
  for_each_json_line(path, [&](const Json& j, std::size_t line) {
    try {
      out.push_back(parse_edge_record(j));
    } catch (const GraphError& e) {
      throw GraphError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

InteractionGraph load_graph(const std::filesystem::path& schema_file,
                            const std::filesystem::path& node_file,
                            const std::filesystem::path& edge_file) {
  return build_graph(load_schema(schema_file), read_node_file(node_file),
                     read_edge_file(edge_file));
}

void save_snapshot(const InteractionGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  AtomicFile schema(dir / "schema.json");
  schema.stream() << to_json(g.schema()).dump(2) << '\n';
  AtomicFile nodes(dir / "nodes.jsonl");
  for (const auto& r : node_records(g)) nodes.stream() << to_json(r).dump() << '\n';
  AtomicFile edges(dir / "edges.jsonl");
  for (const auto& r : edge_records(g)) edges.stream() << to_json(r).dump() << '\n';
  schema.commit();
  nodes.commit();
  edges.commit();
}

InteractionGraph load_snapshot(const std::filesystem::path& dir) {
  return load_graph(dir / "schema.json", dir / "nodes.jsonl", dir / "edges.jsonl");
}

}  // namespace fairy
