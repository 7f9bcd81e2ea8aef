#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hgat/common.hpp"

namespace hgat {

struct EdgeTypeDecl {
    std::string name;
    std::string src_type;
    std::string dst_type;
    bool operator==(const EdgeTypeDecl&) const = default;
};

// Class labels of the target type, plus the optional fine-to-coarse grouping
// used for the binary task. Grouping, when declared, must cover every class.
struct LabelSpace {
    std::vector<std::string> class_names;
    std::vector<int> grouping;  // empty, or per-class coarse index
    std::vector<std::string> coarse_names;

    bool has_grouping() const { return !grouping.empty(); }
    int class_index(const std::string& name) const;
    bool operator==(const LabelSpace&) const = default;
};

struct HinSchema {
    std::vector<std::string> node_types;
    std::vector<EdgeTypeDecl> edge_types;
    std::string target_type;
    LabelSpace labels;

    int type_index(const std::string& name) const;  // -1 when unknown
    int target_index() const { return type_index(target_type); }
    bool operator==(const HinSchema&) const = default;
};

struct HinNode {
    std::string id;
    int label = -1;  // class index, -1 = unlabeled
    std::string text;
    bool operator==(const HinNode&) const = default;
};

struct HinEdge {
    int edge_type;
    int src_type;
    int src;  // index within src_type
    int dst_type;
    int dst;
    bool operator==(const HinEdge&) const = default;
};

// Immutable after load. Node ids are opaque strings; dense per-type indices
// follow file order. Adjacency is undirected, per neighbor type, sorted and
// deduplicated; a node is never stored as its own neighbor (the model layer
// injects self at forward time).
struct HinGraph {
    HinSchema schema;
    std::vector<std::vector<HinNode>> nodes;  // [type][index]
    std::vector<HinEdge> edges;               // file order
    // adjacency[type][index][neighbor_type] -> sorted node indices
    std::vector<std::vector<std::vector<std::vector<int>>>> adjacency;
    std::unordered_map<std::string, std::pair<int, int>> id_index;  // id -> (type, index)

    int target_type() const { return schema.target_index(); }
    std::size_t node_count(int type) const { return nodes.at(static_cast<std::size_t>(type)).size(); }
    std::size_t total_nodes() const;

    const std::vector<int>& neighbors_of_type(int node_type, int node, int neighbor_type) const;
    std::optional<std::pair<int, int>> find_id(const std::string& id) const;

    // Indices (within the target type) of labeled target nodes, ascending.
    std::vector<int> labeled_targets() const;

    bool operator==(const HinGraph&) const = default;
};

HinSchema load_schema(const std::filesystem::path& path);
HinGraph load_graph(const std::filesystem::path& schema_path,
                    const std::filesystem::path& nodes_path,
                    const std::filesystem::path& edges_path);

std::string schema_to_text(const HinSchema& schema);
std::string nodes_to_text(const HinGraph& graph);
std::string edges_to_text(const HinGraph& graph);
void serialize_graph(const HinGraph& graph,
                     const std::filesystem::path& schema_path,
                     const std::filesystem::path& nodes_path,
                     const std::filesystem::path& edges_path);

struct Violation {
    std::string invariant;
    std::string detail;
};

// Invariant scan; violations are data, not failures.
std::vector<Violation> validate(const HinGraph& graph);

struct DegreeStats {
    double mean = 0.0;
    int min = 0;
    int max = 0;
};

struct GraphSummary {
    std::vector<std::pair<std::string, std::size_t>> node_counts;
    std::vector<std::pair<std::string, std::size_t>> edge_counts;
    // (node type, edge type) -> degree stats over all nodes of that type
    std::vector<std::tuple<std::string, std::string, DegreeStats>> degrees;
    std::string to_text() const;
};

GraphSummary summarize(const HinGraph& graph);

// Degenerate mode: merge every node type into one, keeping ids, labels,
// texts and edges, so the model collapses to a plain GAT.
HinGraph collapse_to_homogeneous(const HinGraph& graph);

// Rebuilds adjacency and the id index from schema/nodes/edges; shared by the
// loader and the synthetic generator.
void finalize_graph(HinGraph& graph);

}  // namespace hgat
