#include "hgat/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace hgat {

namespace {

// Line-oriented TSV reader: yields (line_number, fields) for non-blank lines.
class TsvReader {
public:
    TsvReader(const std::filesystem::path& path, bool allow_comments)
        : path_(path.string()), content_(read_file(path)), allow_comments_(allow_comments) {}

    bool next(std::size_t& line_no, std::vector<std::string>& fields) {
        while (pos_ <= content_.size()) {
            if (pos_ == content_.size()) return false;
            std::size_t end = content_.find('\n', pos_);
            if (end == std::string::npos) end = content_.size();
            std::string line = content_.substr(pos_, end - pos_);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            pos_ = end + 1;
            ++line_;
            if (line.empty()) continue;
            if (allow_comments_ && line[0] == '#') continue;
            line_no = line_;
            fields = split_tabs(line);
            return true;
        }
        return false;
    }

    std::string context(std::size_t line_no) const {
        return path_ + ":" + std::to_string(line_no);
    }

private:
    std::string path_;
    std::string content_;
    bool allow_comments_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

[[noreturn]] void parse_fail(const TsvReader& r, std::size_t line, const std::string& msg) {
    throw InputError(r.context(line) + ": " + msg);
}

}  // namespace

int LabelSpace::class_index(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (class_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int HinSchema::type_index(const std::string& name) const {
    for (std::size_t i = 0; i < node_types.size(); ++i) {
        if (node_types[i] == name) return static_cast<int>(i);
    }
    return -1;
}

std::size_t HinGraph::total_nodes() const {
    std::size_t n = 0;
    for (const auto& per_type : nodes) n += per_type.size();
    return n;
}

const std::vector<int>& HinGraph::neighbors_of_type(int node_type, int node,
                                                    int neighbor_type) const {
    if (node_type < 0 || static_cast<std::size_t>(node_type) >= nodes.size()) {
        throw ConfigError("neighbors_of_type: unknown node type index " + std::to_string(node_type));
    }
    if (neighbor_type < 0 || static_cast<std::size_t>(neighbor_type) >= nodes.size()) {
        throw ConfigError("neighbors_of_type: unknown neighbor type index " +
                          std::to_string(neighbor_type));
    }
    if (node < 0 || static_cast<std::size_t>(node) >= nodes[static_cast<std::size_t>(node_type)].size()) {
        throw Error("neighbors_of_type: node index out of range");
    }
    return adjacency[static_cast<std::size_t>(node_type)][static_cast<std::size_t>(node)]
                    [static_cast<std::size_t>(neighbor_type)];
}

std::optional<std::pair<int, int>> HinGraph::find_id(const std::string& id) const {
    auto it = id_index.find(id);
    if (it == id_index.end()) return std::nullopt;
    return it->second;
}

std::vector<int> HinGraph::labeled_targets() const {
    std::vector<int> out;
    const auto& target_nodes = nodes.at(static_cast<std::size_t>(target_type()));
    for (std::size_t i = 0; i < target_nodes.size(); ++i) {
        if (target_nodes[i].label >= 0) out.push_back(static_cast<int>(i));
    }
    return out;
}

HinSchema load_schema(const std::filesystem::path& path) {
    HinSchema schema;
    TsvReader reader(path, /*allow_comments=*/true);
    std::size_t line;
    std::vector<std::string> f;
    std::vector<std::pair<std::string, std::string>> groups;
    while (reader.next(line, f)) {
        const std::string& key = f[0];
        if (key == "node_type") {
            if (f.size() != 2 || f[1].empty()) parse_fail(reader, line, "expected: node_type<TAB>name");
            if (schema.type_index(f[1]) >= 0) parse_fail(reader, line, "duplicate node type '" + f[1] + "'");
            schema.node_types.push_back(f[1]);
        } else if (key == "edge_type") {
            if (f.size() != 4) parse_fail(reader, line, "expected: edge_type<TAB>name<TAB>src<TAB>dst");
            for (const auto& e : schema.edge_types) {
                if (e.name == f[1]) parse_fail(reader, line, "duplicate edge type '" + f[1] + "'");
            }
            schema.edge_types.push_back({f[1], f[2], f[3]});
        } else if (key == "target") {
            if (f.size() != 2) parse_fail(reader, line, "expected: target<TAB>name");
            if (!schema.target_type.empty()) parse_fail(reader, line, "target declared twice");
            schema.target_type = f[1];
        } else if (key == "class") {
            if (f.size() != 2 || f[1].empty()) parse_fail(reader, line, "expected: class<TAB>name");
            if (schema.labels.class_index(f[1]) >= 0) {
                parse_fail(reader, line, "duplicate class '" + f[1] + "'");
            }
            schema.labels.class_names.push_back(f[1]);
        } else if (key == "group") {
            if (f.size() != 3) parse_fail(reader, line, "expected: group<TAB>class<TAB>coarse");
            groups.emplace_back(f[1], f[2]);
        } else {
            parse_fail(reader, line, "unknown schema key '" + key + "'");
        }
    }
    if (schema.node_types.empty()) {
        throw InputError(path.string() + ": schema declares no node types");
    }
    if (schema.target_type.empty()) {
        throw InputError(path.string() + ": schema declares no target type");
    }
    if (schema.target_index() < 0) {
        throw InputError(path.string() + ": target type '" + schema.target_type + "' is not declared");
    }
    for (const auto& e : schema.edge_types) {
        if (schema.type_index(e.src_type) < 0 || schema.type_index(e.dst_type) < 0) {
            throw InputError(path.string() + ": edge type '" + e.name +
                             "' references undeclared node type");
        }
    }
    if (!groups.empty()) {
        schema.labels.grouping.assign(schema.labels.class_names.size(), -1);
        for (const auto& [fine, coarse] : groups) {
            int fi = schema.labels.class_index(fine);
            if (fi < 0) {
                throw InputError(path.string() + ": group references unknown class '" + fine + "'");
            }
            if (schema.labels.grouping[static_cast<std::size_t>(fi)] >= 0) {
                throw InputError(path.string() + ": class '" + fine + "' grouped twice");
            }
            auto it = std::find(schema.labels.coarse_names.begin(),
                                schema.labels.coarse_names.end(), coarse);
            int ci;
            if (it == schema.labels.coarse_names.end()) {
                ci = static_cast<int>(schema.labels.coarse_names.size());
                schema.labels.coarse_names.push_back(coarse);
            } else {
                ci = static_cast<int>(it - schema.labels.coarse_names.begin());
            }
            schema.labels.grouping[static_cast<std::size_t>(fi)] = ci;
        }
        for (std::size_t i = 0; i < schema.labels.grouping.size(); ++i) {
            if (schema.labels.grouping[i] < 0) {
                throw InputError(path.string() + ": grouping is not total; class '" +
                                 schema.labels.class_names[i] + "' has no group");
            }
        }
    }
    return schema;
}

void finalize_graph(HinGraph& graph) {
    const std::size_t num_types = graph.schema.node_types.size();
    graph.nodes.resize(num_types);

    graph.id_index.clear();
    for (std::size_t t = 0; t < num_types; ++t) {
        for (std::size_t i = 0; i < graph.nodes[t].size(); ++i) {
            auto [it, inserted] = graph.id_index.emplace(graph.nodes[t][i].id,
                                                         std::make_pair(static_cast<int>(t),
                                                                        static_cast<int>(i)));
            if (!inserted) {
                throw InputError("duplicate node id '" + graph.nodes[t][i].id + "'");
            }
        }
    }

    graph.adjacency.assign(num_types, {});
    for (std::size_t t = 0; t < num_types; ++t) {
        graph.adjacency[t].assign(graph.nodes[t].size(),
                                  std::vector<std::vector<int>>(num_types));
    }
    for (const HinEdge& e : graph.edges) {
        const auto st = static_cast<std::size_t>(e.src_type);
        const auto dt = static_cast<std::size_t>(e.dst_type);
        if (st >= num_types || dt >= num_types ||
            static_cast<std::size_t>(e.src) >= graph.nodes[st].size() ||
            static_cast<std::size_t>(e.dst) >= graph.nodes[dt].size()) {
            throw InputError("edge references a node index outside the graph");
        }
        graph.adjacency[st][static_cast<std::size_t>(e.src)][dt].push_back(e.dst);
        graph.adjacency[dt][static_cast<std::size_t>(e.dst)][st].push_back(e.src);
    }
    for (auto& per_type : graph.adjacency) {
        for (auto& per_node : per_type) {
            for (auto& list : per_node) {
                std::sort(list.begin(), list.end());
                list.erase(std::unique(list.begin(), list.end()), list.end());
            }
        }
    }
}

HinGraph load_graph(const std::filesystem::path& schema_path,
                    const std::filesystem::path& nodes_path,
                    const std::filesystem::path& edges_path) {
    HinGraph graph;
    graph.schema = load_schema(schema_path);
    const std::size_t num_types = graph.schema.node_types.size();
    graph.nodes.resize(num_types);

    std::unordered_map<std::string, std::pair<int, int>> seen;
    {
        TsvReader reader(nodes_path, /*allow_comments=*/false);
        std::size_t line;
        std::vector<std::string> f;
        while (reader.next(line, f)) {
            if (f.size() != 4) {
                parse_fail(reader, line, "expected 4 tab-separated fields: id, type, label, text");
            }
            const std::string& id = f[0];
            if (id.empty()) parse_fail(reader, line, "empty node id");
            int type = graph.schema.type_index(f[1]);
            if (type < 0) parse_fail(reader, line, "unknown node type '" + f[1] + "'");
            int label = -1;
            if (f[2] != "-") {
                label = graph.schema.labels.class_index(f[2]);
                if (label < 0) parse_fail(reader, line, "unknown class '" + f[2] + "'");
                if (type != graph.schema.target_index()) {
                    parse_fail(reader, line, "label on non-target node '" + id + "' of type '" +
                                                 f[1] + "'");
                }
            }
            std::string text = unescape_text(f[3], reader.context(line));
            auto [it, inserted] = seen.emplace(
                id, std::make_pair(type, static_cast<int>(graph.nodes[static_cast<std::size_t>(type)].size())));
            if (!inserted) parse_fail(reader, line, "duplicate node id '" + id + "'");
            graph.nodes[static_cast<std::size_t>(type)].push_back({id, label, std::move(text)});
        }
    }

    {
        TsvReader reader(edges_path, /*allow_comments=*/false);
        std::size_t line;
        std::vector<std::string> f;
        while (reader.next(line, f)) {
            if (f.size() != 3) {
                parse_fail(reader, line, "expected 3 tab-separated fields: edge_type, source, destination");
            }
            int etype = -1;
            for (std::size_t i = 0; i < graph.schema.edge_types.size(); ++i) {
                if (graph.schema.edge_types[i].name == f[0]) etype = static_cast<int>(i);
            }
            if (etype < 0) parse_fail(reader, line, "unknown edge type '" + f[0] + "'");
            const EdgeTypeDecl& decl = graph.schema.edge_types[static_cast<std::size_t>(etype)];
            auto src = seen.find(f[1]);
            if (src == seen.end()) {
                parse_fail(reader, line, "edge endpoint '" + f[1] + "' does not exist");
            }
            auto dst = seen.find(f[2]);
            if (dst == seen.end()) {
                parse_fail(reader, line, "edge endpoint '" + f[2] + "' does not exist");
            }
            int want_src = graph.schema.type_index(decl.src_type);
            int want_dst = graph.schema.type_index(decl.dst_type);
            if (src->second.first != want_src) {
                parse_fail(reader, line, "edge '" + decl.name + "' expects source type '" +
                                             decl.src_type + "' but '" + f[1] + "' has type '" +
                                             graph.schema.node_types[static_cast<std::size_t>(src->second.first)] + "'");
            }
            if (dst->second.first != want_dst) {
                parse_fail(reader, line, "edge '" + decl.name + "' expects destination type '" +
                                             decl.dst_type + "' but '" + f[2] + "' has type '" +
                                             graph.schema.node_types[static_cast<std::size_t>(dst->second.first)] + "'");
            }
            graph.edges.push_back({etype, want_src, src->second.second, want_dst, dst->second.second});
        }
    }

    finalize_graph(graph);
    return graph;
}

std::string schema_to_text(const HinSchema& schema) {
    std::string out;
    for (const auto& t : schema.node_types) out += "node_type\t" + t + "\n";
    for (const auto& e : schema.edge_types) {
        out += "edge_type\t" + e.name + "\t" + e.src_type + "\t" + e.dst_type + "\n";
    }
    out += "target\t" + schema.target_type + "\n";
    for (const auto& c : schema.labels.class_names) out += "class\t" + c + "\n";
    if (schema.labels.has_grouping()) {
        for (std::size_t i = 0; i < schema.labels.class_names.size(); ++i) {
            out += "group\t" + schema.labels.class_names[i] + "\t" +
                   schema.labels.coarse_names[static_cast<std::size_t>(schema.labels.grouping[i])] + "\n";
        }
    }
    return out;
}

std::string nodes_to_text(const HinGraph& graph) {
    std::string out;
    for (std::size_t t = 0; t < graph.nodes.size(); ++t) {
        for (const HinNode& n : graph.nodes[t]) {
            out += n.id + "\t" + graph.schema.node_types[t] + "\t";
            out += n.label >= 0 ? graph.schema.labels.class_names[static_cast<std::size_t>(n.label)]
                                : std::string("-");
            out += "\t" + escape_text(n.text) + "\n";
        }
    }
    return out;
}

std::string edges_to_text(const HinGraph& graph) {
    std::string out;
    for (const HinEdge& e : graph.edges) {
        out += graph.schema.edge_types[static_cast<std::size_t>(e.edge_type)].name + "\t" +
               graph.nodes[static_cast<std::size_t>(e.src_type)][static_cast<std::size_t>(e.src)].id + "\t" +
               graph.nodes[static_cast<std::size_t>(e.dst_type)][static_cast<std::size_t>(e.dst)].id + "\n";
    }
    return out;
}

void serialize_graph(const HinGraph& graph,
                     const std::filesystem::path& schema_path,
                     const std::filesystem::path& nodes_path,
                     const std::filesystem::path& edges_path) {
    atomic_write_file(schema_path, schema_to_text(graph.schema));
    atomic_write_file(nodes_path, nodes_to_text(graph));
    atomic_write_file(edges_path, edges_to_text(graph));
}

std::vector<Violation> validate(const HinGraph& graph) {
    std::vector<Violation> out;
    const std::size_t num_types = graph.schema.node_types.size();

    std::unordered_map<std::string, int> id_count;
    for (const auto& per_type : graph.nodes) {
        for (const HinNode& n : per_type) ++id_count[n.id];
    }
    for (const auto& [id, count] : id_count) {
        if (count > 1) out.push_back({"unique-node-ids", "id '" + id + "' appears " +
                                                             std::to_string(count) + " times"});
    }

    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const HinEdge& e = graph.edges[i];
        const auto idx = std::to_string(i);
        if (e.edge_type < 0 || static_cast<std::size_t>(e.edge_type) >= graph.schema.edge_types.size()) {
            out.push_back({"edge-endpoint-types", "edge #" + idx + " has unknown edge type"});
            continue;
        }
        const EdgeTypeDecl& decl = graph.schema.edge_types[static_cast<std::size_t>(e.edge_type)];
        bool src_ok = e.src_type >= 0 && static_cast<std::size_t>(e.src_type) < num_types &&
                      e.src >= 0 && static_cast<std::size_t>(e.src) < graph.nodes[static_cast<std::size_t>(e.src_type)].size();
        bool dst_ok = e.dst_type >= 0 && static_cast<std::size_t>(e.dst_type) < num_types &&
                      e.dst >= 0 && static_cast<std::size_t>(e.dst) < graph.nodes[static_cast<std::size_t>(e.dst_type)].size();
        if (!src_ok || !dst_ok) {
            out.push_back({"edge-endpoint-exists", "edge #" + idx + " (" + decl.name +
                                                       ") references a missing node"});
            continue;
        }
        if (graph.schema.node_types[static_cast<std::size_t>(e.src_type)] != decl.src_type ||
            graph.schema.node_types[static_cast<std::size_t>(e.dst_type)] != decl.dst_type) {
            out.push_back({"edge-endpoint-types",
                           "edge #" + idx + " (" + decl.name + ") connects " +
                               graph.schema.node_types[static_cast<std::size_t>(e.src_type)] + "->" +
                               graph.schema.node_types[static_cast<std::size_t>(e.dst_type)] +
                               " but is declared " + decl.src_type + "->" + decl.dst_type});
        }
    }

    for (std::size_t t = 0; t < graph.nodes.size() && t < graph.adjacency.size(); ++t) {
        for (std::size_t i = 0; i < graph.adjacency[t].size(); ++i) {
            for (std::size_t nt = 0; nt < graph.adjacency[t][i].size(); ++nt) {
                const auto& list = graph.adjacency[t][i][nt];
                bool sorted = std::is_sorted(list.begin(), list.end());
                bool unique = std::adjacent_find(list.begin(), list.end()) == list.end();
                if (!sorted || !unique) {
                    out.push_back({"adjacency-sorted-unique",
                                   "adjacency of " + graph.nodes[t][i].id + " toward type '" +
                                       graph.schema.node_types[nt] + "' is not sorted/deduplicated"});
                }
            }
        }
    }

    const int target = graph.schema.target_index();
    for (std::size_t t = 0; t < graph.nodes.size(); ++t) {
        for (const HinNode& n : graph.nodes[t]) {
            if (n.label < 0) continue;
            if (static_cast<int>(t) != target) {
                out.push_back({"label-on-target-type-only",
                               "node '" + n.id + "' of type '" + graph.schema.node_types[t] +
                                   "' carries a label"});
            } else if (static_cast<std::size_t>(n.label) >= graph.schema.labels.class_names.size()) {
                out.push_back({"label-in-range", "node '" + n.id + "' has class index " +
                                                      std::to_string(n.label) + " out of range"});
            }
        }
    }
    return out;
}

GraphSummary summarize(const HinGraph& graph) {
    GraphSummary s;
    for (std::size_t t = 0; t < graph.nodes.size(); ++t) {
        s.node_counts.emplace_back(graph.schema.node_types[t], graph.nodes[t].size());
    }
    std::vector<std::size_t> edge_counts(graph.schema.edge_types.size(), 0);
    for (const HinEdge& e : graph.edges) {
        ++edge_counts[static_cast<std::size_t>(e.edge_type)];
    }
    for (std::size_t i = 0; i < edge_counts.size(); ++i) {
        s.edge_counts.emplace_back(graph.schema.edge_types[i].name, edge_counts[i]);
    }

    // Degree per (node type, edge type), counting every incidence.
    for (std::size_t t = 0; t < graph.nodes.size(); ++t) {
        for (std::size_t et = 0; et < graph.schema.edge_types.size(); ++et) {
            const EdgeTypeDecl& decl = graph.schema.edge_types[et];
            if (decl.src_type != graph.schema.node_types[t] &&
                decl.dst_type != graph.schema.node_types[t]) {
                continue;
            }
            std::vector<int> degree(graph.nodes[t].size(), 0);
            for (const HinEdge& e : graph.edges) {
                if (static_cast<std::size_t>(e.edge_type) != et) continue;
                if (static_cast<std::size_t>(e.src_type) == t) ++degree[static_cast<std::size_t>(e.src)];
                if (static_cast<std::size_t>(e.dst_type) == t) ++degree[static_cast<std::size_t>(e.dst)];
            }
            DegreeStats stats;
            if (!degree.empty()) {
                long long total = 0;
                stats.min = degree[0];
                stats.max = degree[0];
                for (int d : degree) {
                    total += d;
                    stats.min = std::min(stats.min, d);
                    stats.max = std::max(stats.max, d);
                }
                stats.mean = static_cast<double>(total) / static_cast<double>(degree.size());
            }
            s.degrees.emplace_back(graph.schema.node_types[t], decl.name, stats);
        }
    }
    return s;
}

std::string GraphSummary::to_text() const {
    std::ostringstream out;
    out << "nodes\n";
    for (const auto& [name, count] : node_counts) {
        out << "  " << name << "\t" << count << "\n";
    }
    out << "edges\n";
    for (const auto& [name, count] : edge_counts) {
        out << "  " << name << "\t" << count << "\n";
    }
    out << "degrees (type x edge: mean/min/max)\n";
    for (const auto& [type, edge, stats] : degrees) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", stats.mean);
        out << "  " << type << " x " << edge << "\t" << buf << "\t" << stats.min << "\t"
            << stats.max << "\n";
    }
    return out.str();
}

HinGraph collapse_to_homogeneous(const HinGraph& graph) {
    HinGraph flat;
    flat.schema.node_types = {"node"};
    flat.schema.edge_types = {{"edge", "node", "node"}};
    flat.schema.target_type = "node";
    flat.schema.labels = graph.schema.labels;

    std::vector<int> offset(graph.nodes.size(), 0);
    int running = 0;
    for (std::size_t t = 0; t < graph.nodes.size(); ++t) {
        offset[t] = running;
        running += static_cast<int>(graph.nodes[t].size());
    }
    flat.nodes.resize(1);
    flat.nodes[0].reserve(static_cast<std::size_t>(running));
    for (const auto& per_type : graph.nodes) {
        for (const HinNode& n : per_type) flat.nodes[0].push_back(n);
    }
    flat.edges.reserve(graph.edges.size());
    for (const HinEdge& e : graph.edges) {
        flat.edges.push_back({0, 0, offset[static_cast<std::size_t>(e.src_type)] + e.src, 0,
                              offset[static_cast<std::size_t>(e.dst_type)] + e.dst});
    }
    finalize_graph(flat);
    return flat;
}

}  // namespace hgat
