#pragma once

#include <filesystem>
#include <vector>

#include "fairy/graph.hpp"
#include "fairy/io.hpp"

namespace fairy {

NodeRecord parse_node_record(const Json& j);
EdgeRecord parse_edge_record(const Json& j);
Json to_json(const NodeRecord& r);
Json to_json(const EdgeRecord& r);

std::vector<NodeRecord> read_node_file(const std::filesystem::path& path);
std::vector<EdgeRecord> read_edge_file(const std::filesystem::path& path);

InteractionGraph load_graph(const std::filesystem::path& schema_file,
                            const std::filesystem::path& node_file,
                            const std::filesystem::path& edge_file);

/// A snapshot is a directory holding schema.json, nodes.jsonl and edges.jsonl.
void save_snapshot(const InteractionGraph& g, const std::filesystem::path& dir);
InteractionGraph load_snapshot(const std::filesystem::path& dir);

}  // namespace fairy
