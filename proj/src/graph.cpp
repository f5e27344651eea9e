#include "schemalink/graph.hpp"
#include "schemalink/error.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace schemalink {

EdgeProvenance GraphEdge::provenance() const {
    for (const auto& j : justifications) {
        if (j.provenance == EdgeProvenance::DeclaredFk)
            return EdgeProvenance::DeclaredFk;
    }
    return EdgeProvenance::IdAugmented;
}

std::optional<NodeId> SchemaGraph::find(std::string_view table) const {
    auto it = index_.find(to_lower(table));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

NodeId SchemaGraph::require(std::string_view table) const {
    if (auto id = find(table))
        return *id;
    throw Error(ErrorCode::UnknownTable, std::string(table));
}

const GraphEdge* SchemaGraph::edge_between(NodeId x, NodeId y) const {
    if (x > y)
        std::swap(x, y);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(x, y),
                               [](const GraphEdge& e, const std::pair<NodeId, NodeId>& key) {
                                   return std::make_pair(e.a, e.b) < key;
                               });
    if (it == edges_.end() || it->a != x || it->b != y)
        return nullptr;
    return &*it;
}

class GraphBuilder {
public:
    explicit GraphBuilder(const SchemaGraph& base) : graph_(base) {
        for (auto& e : graph_.edges_)
            pairs_.emplace(std::make_pair(e.a, e.b), std::move(e.justifications));
    }

    explicit GraphBuilder(const Schema& schema) {
        for (const auto& t : schema.tables) {
            graph_.index_.emplace(to_lower(t.name), graph_.names_.size());
            graph_.names_.push_back(t.name);
        }
    }

    std::optional<NodeId> find(std::string_view name) const { return graph_.find(name); }
    bool has_pair(NodeId x, NodeId y) const { return pairs_.count(ordered(x, y)) > 0; }

    void add(NodeId x, NodeId y, ForeignKeyEdge justification) {
        if (x == y)
            return;
        pairs_[ordered(x, y)].push_back(std::move(justification));
    }

    SchemaGraph finish() && {
        graph_.edges_.clear();
        graph_.adjacency_.assign(graph_.names_.size(), {});
        for (auto& [pair, just] : pairs_) {
            graph_.edges_.push_back(GraphEdge{pair.first, pair.second, std::move(just)});
            graph_.adjacency_[pair.first].push_back(pair.second);
            graph_.adjacency_[pair.second].push_back(pair.first);
        }
        for (auto& adj : graph_.adjacency_)
            std::sort(adj.begin(), adj.end());
        return std::move(graph_);
    }

private:
    static std::pair<NodeId, NodeId> ordered(NodeId x, NodeId y) { return x < y ? std::pair{x, y} : std::pair{y, x}; }

    SchemaGraph graph_;
    std::map<std::pair<NodeId, NodeId>, std::vector<ForeignKeyEdge>> pairs_;
};

SchemaGraph build_graph(const Schema& schema) {
    GraphBuilder builder(schema);
    for (const auto& fk : schema.foreign_keys) {
        auto from = builder.find(fk.from_table);
        auto to = builder.find(fk.to_table);
        if (!from || !to)
            throw Error(ErrorCode::DanglingFkReference, fk.join_condition());
        builder.add(*from, *to, fk);
    }
    return std::move(builder).finish();
}

bool is_id_column(std::string_view column, IdColumnRule rule) {
    const auto name = to_lower(column);
    if (rule == IdColumnRule::Substring)
        return name.find("id") != std::string::npos;
    if (name == "id")
        return true;
    if (name.size() > 3 && name.compare(name.size() - 3, 3, "_id") == 0)
        return true;
    if (name.rfind("id_", 0) == 0)
        return true;
    return name.find("_id_") != std::string::npos;
}

SchemaGraph augment_sparse_graph(const SchemaGraph& graph, const Schema& schema, IdColumnRule rule) {
    if (graph.edge_count() >= 2)
        return graph;

    GraphBuilder builder(graph);
    for (std::size_t i = 0; i < schema.tables.size(); ++i) {
        for (std::size_t j = i + 1; j < schema.tables.size(); ++j) {
            const auto& left = schema.tables[i];
            const auto& right = schema.tables[j];
            auto x = graph.find(left.name);
            auto y = graph.find(right.name);
            if (!x || !y || builder.has_pair(*x, *y))
                continue;
            for (const auto& col : left.columns) {
                if (!is_id_column(col.name, rule))
                    continue;
                if (const auto* other = right.find_column(col.name)) {
                    builder.add(*x, *y,
                                ForeignKeyEdge{left.name, col.name, right.name, other->name,
                                               EdgeProvenance::IdAugmented});
                }
            }
        }
    }
    return std::move(builder).finish();
}

} // namespace schemalink
