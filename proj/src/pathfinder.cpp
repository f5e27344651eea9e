#include "schemalink/pathfinder.hpp"
#include "schemalink/error.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

namespace schemalink {

// ---------------------------------------------------------------------------
// Configuration presets
// ---------------------------------------------------------------------------

LinkerConfig LinkerConfig::mode(int number) {
    using E = EndpointLimit;
    using U = UnionMode;
    switch (number) {
    case 1: return {1, E::One, E::One, false, U::AppendUnion};
    case 2: return {2, E::One, E::All, false, U::AppendUnion};
    case 3: return {3, E::All, E::One, false, U::AppendUnion};
    case 4: return {4, E::All, E::All, false, U::AppendUnion};
    case 5: return {5, E::All, E::All, true, U::AppendUnion};
    case 6: return {6, E::All, E::All, false, U::NoUnion};
    case 7: return {7, E::All, E::All, false, U::ForceUnion};
    default: throw Error(ErrorCode::ConfigError, "no linker mode " + std::to_string(number));
    }
}

std::string_view LinkerConfig::label() const {
    static constexpr std::string_view labels[] = {"1-1",           "1-n",      "n-1",        "n-n",
                                                  "force-longest", "no-union", "force-union"};
    return labels[number_ - 1];
}

LinkerConfig LinkerConfig::parse(std::string_view name) {
    const auto lowered = to_lower(trim(name));
    for (int i = 1; i <= 7; ++i) {
        auto cfg = mode(i);
        if (lowered == cfg.name() || lowered == std::to_string(i) || lowered == cfg.label())
            return cfg;
    }
    throw Error(ErrorCode::ConfigError, "unknown linker mode '" + std::string(name) + "'");
}

std::vector<LinkerConfig> LinkerConfig::all_modes() {
    std::vector<LinkerConfig> out;
    for (int i = 1; i <= 7; ++i)
        out.push_back(mode(i));
    return out;
}

// ---------------------------------------------------------------------------
// Shortest paths
// ---------------------------------------------------------------------------

std::vector<std::vector<NodeId>> all_shortest_paths(const SchemaGraph& graph, NodeId src, NodeId dst) {
    const auto n = graph.node_count();
    if (src >= n || dst >= n)
        throw Error(ErrorCode::UnknownTable, "node id out of range");
    if (src == dst)
        return {{src}};

    constexpr auto unseen = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> depth(n, unseen);
    std::vector<std::vector<NodeId>> preds(n);

    // BFS layering; every predecessor at depth d-1 is kept.
    std::deque<NodeId> queue{src};
    depth[src] = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (depth[dst] != unseen && depth[u] >= depth[dst])
            break;
        for (auto v : graph.neighbors(u)) {
            if (depth[v] == unseen) {
                depth[v] = depth[u] + 1;
                preds[v].push_back(u);
                queue.push_back(v);
            } else if (depth[v] == depth[u] + 1) {
                preds[v].push_back(u);
            }
        }
    }
    if (depth[dst] == unseen)
        return {};

    // Walk predecessor lists back from dst.
    std::vector<std::vector<NodeId>> paths;
    std::vector<NodeId> stack{dst};
    auto walk = [&](auto&& self, NodeId node) -> void {
        if (node == src) {
            paths.emplace_back(stack.rbegin(), stack.rend());
            return;
        }
        for (auto p : preds[node]) {
            stack.push_back(p);
            self(self, p);
            stack.pop_back();
        }
    };
    walk(walk, dst);
    return paths;
}

namespace {

JoinPath to_join_path(const SchemaGraph& graph, const std::vector<NodeId>& ids) {
    JoinPath path;
    path.tables.reserve(ids.size());
    for (auto id : ids)
        path.tables.push_back(graph.name(id));
    return path;
}

void sort_paths(std::vector<JoinPath>& paths) {
    std::sort(paths.begin(), paths.end(), [](const JoinPath& a, const JoinPath& b) {
        return names_less(a.tables, b.tables);
    });
}

} // namespace

std::vector<JoinPath> all_shortest_paths(const SchemaGraph& graph, std::string_view src, std::string_view dst) {
    const auto s = graph.require(src);
    const auto d = graph.require(dst);
    std::vector<JoinPath> out;
    for (const auto& ids : all_shortest_paths(graph, s, d))
        out.push_back(to_join_path(graph, ids));
    sort_paths(out);
    return out;
}

JoinPath canonical_orientation(JoinPath path) {
    std::vector<std::string> reversed(path.tables.rbegin(), path.tables.rend());
    if (names_less(reversed, path.tables))
        path.tables = std::move(reversed);
    return path;
}

// ---------------------------------------------------------------------------
// Candidate set
// ---------------------------------------------------------------------------

namespace {

std::vector<NodeId> resolve_endpoints(const SchemaGraph& graph, const std::vector<std::string>& names,
                                      EndpointLimit limit) {
    std::vector<NodeId> ids;
    for (const auto& name : names) {
        const auto id = graph.require(name);
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
            ids.push_back(id);
    }
    if (limit == EndpointLimit::One && ids.size() > 1)
        ids.resize(1);
    return ids;
}

bool induces_connected_subgraph(const SchemaGraph& graph, const TableSet& tables) {
    if (tables.size() <= 1)
        return true;
    std::vector<char> member(graph.node_count(), 0);
    for (const auto& t : tables)
        member[graph.require(t)] = 1;
    const auto start = graph.require(*tables.begin());
    std::vector<char> seen(graph.node_count(), 0);
    std::vector<NodeId> stack{start};
    seen[start] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (auto v : graph.neighbors(u)) {
            if (member[v] && !seen[v]) {
                seen[v] = 1;
                ++reached;
                stack.push_back(v);
            }
        }
    }
    return reached == tables.size();
}

} // namespace

CandidateSet build_candidates(const SchemaGraph& graph, const std::vector<std::string>& sources,
                              const std::vector<std::string>& destinations, const LinkerConfig& config) {
    const auto src_ids = resolve_endpoints(graph, sources, config.sources_limit());
    const auto dst_ids = resolve_endpoints(graph, destinations, config.destinations_limit());
    if (src_ids.empty() || dst_ids.empty())
        throw Error(ErrorCode::EmptyEndpoints, src_ids.empty() ? "no source tables" : "no destination tables");

    auto less = [](const JoinPath& a, const JoinPath& b) { return names_less(a.tables, b.tables); };
    std::set<JoinPath, decltype(less)> unique(less);
    CandidateSet out;

    for (auto s : src_ids) {
        for (auto d : dst_ids) {
            auto paths = all_shortest_paths(graph, s, d);
            if (paths.empty()) {
                out.disconnected_pairs.emplace_back(graph.name(s), graph.name(d));
                unique.insert(JoinPath{{graph.name(s)}});
                unique.insert(JoinPath{{graph.name(d)}});
                continue;
            }
            for (const auto& ids : paths)
                unique.insert(canonical_orientation(to_join_path(graph, ids)));
        }
    }

    out.paths.assign(unique.begin(), unique.end());
    for (const auto& p : out.paths)
        out.union_tables.insert(p.tables.begin(), p.tables.end());
    out.union_connected = induces_connected_subgraph(graph, out.union_tables);
    return out;
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

std::vector<PathChoice> selection_choices(const CandidateSet& candidates, const LinkerConfig& config) {
    std::vector<PathChoice> choices;
    for (std::size_t i = 0; i < candidates.paths.size(); ++i)
        choices.push_back(PathChoice{i + 1, &candidates.paths[i], candidates.paths[i].table_set()});
    if (config.union_mode() == UnionMode::AppendUnion)
        choices.push_back(PathChoice{choices.size() + 1, nullptr, candidates.union_tables});
    return choices;
}

Selection select_path(const CandidateSet& candidates, const LinkerConfig& config, const PathSelector& selector) {
    if (candidates.paths.empty())
        throw Error(ErrorCode::EmptyEndpoints, "empty candidate set");

    Selection sel;
    auto choose_union = [&] {
        sel.chosen_tables = candidates.union_tables;
        sel.chosen_path_id.reset();
        sel.chosen_path.reset();
    };
    auto choose_path = [&](std::size_t index) {
        sel.chosen_path_id = index + 1;
        sel.chosen_path = candidates.paths[index];
        sel.chosen_tables = candidates.paths[index].table_set();
    };

    if (config.union_mode() == UnionMode::ForceUnion) {
        choose_union();
        return sel;
    }

    if (config.longest()) {
        // Paths are already in lexicographic order, so the first maximum wins ties.
        std::size_t best = 0;
        for (std::size_t i = 1; i < candidates.paths.size(); ++i) {
            if (candidates.paths[i].length() > candidates.paths[best].length())
                best = i;
        }
        choose_path(best);
        return sel;
    }

    if (candidates.paths.size() == 1) {
        choose_path(0);
        return sel;
    }

    const auto choices = selection_choices(candidates, config);
    std::size_t id = 0;
    sel.selector_called = true;
    try {
        id = selector(choices);
    } catch (const Error& e) {
        sel.warnings.push_back(std::string("path selection failed, using union: ") + e.what());
        choose_union();
        return sel;
    }
    if (id < 1 || id > choices.size()) {
        sel.warnings.push_back(std::string(to_string(ErrorCode::SelectorInvalidId)) + ": path_id " +
                               std::to_string(id) + " outside 1.." + std::to_string(choices.size()) +
                               ", using union");
        choose_union();
        return sel;
    }
    const auto& choice = choices[id - 1];
    if (choice.is_union()) {
        choose_union();
        sel.chosen_path_id = id;
    } else {
        choose_path(id - 1);
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Full linking
// ---------------------------------------------------------------------------

std::vector<ForeignKeyEdge> induced_foreign_keys(const Schema& schema, const TableSet& tables) {
    std::vector<ForeignKeyEdge> out;
    for (const auto& fk : schema.foreign_keys) {
        if (tables.count(fk.from_table) && tables.count(fk.to_table))
            out.push_back(fk);
    }
    return out;
}

LinkResult link(const LinkQuery& query, const Schema& schema, const SchemaGraph& graph, const LinkerConfig& config,
                const EndpointOracle& endpoints, const PathOracle& path_oracle) {
    LinkResult result;
    auto extracted = endpoints(query);
    result.endpoint_calls = extracted.calls;
    result.degraded = extracted.degraded;
    result.warnings = std::move(extracted.warnings);

    auto canonical = [&](const std::vector<std::string>& names) {
        std::vector<std::string> out;
        for (const auto& n : names) {
            const auto& name = graph.name(graph.require(n));
            if (std::find(out.begin(), out.end(), name) == out.end())
                out.push_back(name);
        }
        return out;
    };
    result.sources = canonical(extracted.sources);
    result.destinations = canonical(extracted.destinations);

    result.candidates = build_candidates(graph, result.sources, result.destinations, config);
    for (const auto& [s, d] : result.candidates.disconnected_pairs)
        result.warnings.push_back("no path between " + s + " and " + d + "; both kept as standalone tables");

    auto selection = select_path(result.candidates, config, [&](std::span<const PathChoice> choices) {
        ++result.path_select_calls;
        return path_oracle(query, result.candidates, choices);
    });
    result.chosen_tables = std::move(selection.chosen_tables);
    result.chosen_path_id = selection.chosen_path_id;
    result.chosen_path = std::move(selection.chosen_path);
    result.warnings.insert(result.warnings.end(), selection.warnings.begin(), selection.warnings.end());

    if (result.chosen_path) {
        const auto& tables = result.chosen_path->tables;
        for (std::size_t i = 0; i + 1 < tables.size(); ++i) {
            const auto* edge = graph.edge_between(graph.require(tables[i]), graph.require(tables[i + 1]));
            result.chosen_path_joins.push_back(edge ? edge->justifications : std::vector<ForeignKeyEdge>{});
        }
    }
    result.induced_fk_edges = induced_foreign_keys(schema, result.chosen_tables);
    for (const auto& edge : graph.edges()) {
        if (!result.chosen_tables.count(graph.name(edge.a)) || !result.chosen_tables.count(graph.name(edge.b)))
            continue;
        for (const auto& j : edge.justifications) {
            if (j.provenance == EdgeProvenance::IdAugmented)
                result.augmented_joins.push_back(j);
        }
    }
    return result;
}

} // namespace schemalink
