#pragma once

#include "schemalink/graph.hpp"
#include "schemalink/schema.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace schemalink {

struct JoinPath {
    std::vector<std::string> tables;

    std::size_t length() const { return tables.empty() ? 0 : tables.size() - 1; }
    TableSet table_set() const { return TableSet(tables.begin(), tables.end()); }

    bool operator==(const JoinPath&) const = default;
};

struct CandidateSet {
    std::vector<JoinPath> paths; // canonical orientation, lexicographic order
    TableSet union_tables;
    /// Source/destination pairs with no connecting path; both ends were added as length-0 paths.
    std::vector<std::pair<std::string, std::string>> disconnected_pairs;
    bool union_connected = true;

    bool operator==(const CandidateSet&) const = default;
};

enum class EndpointLimit { One, All };
enum class UnionMode { AppendUnion, NoUnion, ForceUnion };

/// Selection strategy. The seven named presets are the only supported combinations.
class LinkerConfig {
public:
    static LinkerConfig mode(int number);
    static LinkerConfig parse(std::string_view name); // "mode1".."mode7", "force-union", ...
    static std::vector<LinkerConfig> all_modes();

    int number() const { return number_; }
    std::string name() const { return "mode" + std::to_string(number_); }
    std::string_view label() const;

    EndpointLimit sources_limit() const { return k_s_; }
    EndpointLimit destinations_limit() const { return k_d_; }
    bool longest() const { return longest_; }
    UnionMode union_mode() const { return union_; }

    bool operator==(const LinkerConfig&) const = default;

private:
    LinkerConfig(int number, EndpointLimit ks, EndpointLimit kd, bool longest, UnionMode u)
        : number_(number), k_s_(ks), k_d_(kd), longest_(longest), union_(u) {}

    int number_;
    EndpointLimit k_s_;
    EndpointLimit k_d_;
    bool longest_;
    UnionMode union_;
};

/// Every simple path of minimal length from `src` to `dst`, sorted
/// lexicographically by table names. `src == dst` yields the single path [src];
/// unreachable pairs yield nothing.
std::vector<JoinPath> all_shortest_paths(const SchemaGraph& graph, std::string_view src, std::string_view dst);
std::vector<std::vector<NodeId>> all_shortest_paths(const SchemaGraph& graph, NodeId src, NodeId dst);

/// The lexicographically smaller of the path and its reverse.
JoinPath canonical_orientation(JoinPath path);

CandidateSet build_candidates(const SchemaGraph& graph, const std::vector<std::string>& sources,
                              const std::vector<std::string>& destinations, const LinkerConfig& config);

/// One entry of the list shown to the path selector (ids start at 1).
struct PathChoice {
    std::size_t path_id = 0;
    const JoinPath* path = nullptr; // null for the synthetic union entry
    TableSet tables;

    bool is_union() const { return path == nullptr; }
};

/// Returns the chosen path_id. May throw Error (NO_PARSE / OUT_OF_RANGE / ...);
/// the caller falls back to the union.
using PathSelector = std::function<std::size_t(std::span<const PathChoice>)>;

struct Selection {
    TableSet chosen_tables;
    std::optional<std::size_t> chosen_path_id;
    std::optional<JoinPath> chosen_path; // set when a real path (not the union) was chosen
    bool selector_called = false;
    std::vector<std::string> warnings;
};

std::vector<PathChoice> selection_choices(const CandidateSet& candidates, const LinkerConfig& config);

Selection select_path(const CandidateSet& candidates, const LinkerConfig& config, const PathSelector& selector);

struct LinkQuery {
    std::string question;
    std::optional<std::string> evidence;
};

struct Endpoints {
    std::vector<std::string> sources;
    std::vector<std::string> destinations;
    bool degraded = false; // extraction failed; endpoints default to the whole schema
    std::vector<std::string> warnings;
    std::size_t calls = 1;
};

using EndpointOracle = std::function<Endpoints(const LinkQuery&)>;
/// Like PathSelector but with access to the question and the candidate set.
using PathOracle =
    std::function<std::size_t(const LinkQuery&, const CandidateSet&, std::span<const PathChoice>)>;

struct LinkResult {
    std::vector<std::string> sources;
    std::vector<std::string> destinations;
    CandidateSet candidates;
    TableSet chosen_tables;
    std::optional<std::size_t> chosen_path_id;
    std::optional<JoinPath> chosen_path;
    /// Join columns along `chosen_path`, one group per hop.
    std::vector<std::vector<ForeignKeyEdge>> chosen_path_joins;
    /// Declared FKs with both endpoints inside `chosen_tables` (self-references included).
    std::vector<ForeignKeyEdge> induced_fk_edges;
    /// Augmented id links between chosen tables; empty unless the graph was augmented.
    std::vector<ForeignKeyEdge> augmented_joins;
    bool degraded = false;
    std::size_t endpoint_calls = 0;
    std::size_t path_select_calls = 0;
    std::vector<std::string> warnings;
};

std::vector<ForeignKeyEdge> induced_foreign_keys(const Schema& schema, const TableSet& tables);

LinkResult link(const LinkQuery& query, const Schema& schema, const SchemaGraph& graph, const LinkerConfig& config,
                const EndpointOracle& endpoints, const PathOracle& path_oracle);

} // namespace schemalink
