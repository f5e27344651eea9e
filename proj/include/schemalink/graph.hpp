#pragma once

#include "schemalink/schema.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace schemalink {

using NodeId = std::size_t;

struct GraphEdge {
    NodeId a = 0; // a < b
    NodeId b = 0;
    std::vector<ForeignKeyEdge> justifications;

    /// DECLARED_FK when any justification is a declared FK.
    EdgeProvenance provenance() const;

    bool operator==(const GraphEdge&) const = default;
};

/// Undirected table-level graph. Nodes follow schema table order; edges are
/// unique unordered pairs sorted by (a, b); neighbor lists are ascending.
class SchemaGraph {
public:
    SchemaGraph() = default;

    std::size_t node_count() const { return names_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const std::string& name(NodeId id) const { return names_.at(id); }
    std::span<const std::string> names() const { return names_; }
    std::optional<NodeId> find(std::string_view table) const;
    NodeId require(std::string_view table) const;

    std::span<const GraphEdge> edges() const { return edges_; }
    std::span<const NodeId> neighbors(NodeId id) const { return adjacency_.at(id); }
    const GraphEdge* edge_between(NodeId x, NodeId y) const;
    bool adjacent(NodeId x, NodeId y) const { return edge_between(x, y) != nullptr; }

    bool operator==(const SchemaGraph& other) const {
        return names_ == other.names_ && edges_ == other.edges_;
    }

private:
    friend class GraphBuilder;

    std::vector<std::string> names_;
    std::unordered_map<std::string, NodeId> index_; // lowercased name -> id
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<NodeId>> adjacency_;
};

/// One node per table, one edge per table pair joined by at least one
/// non-self-referencing FK. Parallel FKs collapse into a single edge.
SchemaGraph build_graph(const Schema& schema);

enum class IdColumnRule {
    /// `id`, `*_id`, `id_*`, `*_id_*` (case-insensitive).
    TokenBoundary,
    /// Any column whose lowercased name contains "id".
    Substring,
};

bool is_id_column(std::string_view column, IdColumnRule rule = IdColumnRule::TokenBoundary);

/// For graphs with fewer than two edges, links every pair of tables sharing an
/// identically named id-like column. Graphs with two or more edges come back unchanged.
SchemaGraph augment_sparse_graph(const SchemaGraph& graph, const Schema& schema,
                                 IdColumnRule rule = IdColumnRule::TokenBoundary);

} // namespace schemalink
