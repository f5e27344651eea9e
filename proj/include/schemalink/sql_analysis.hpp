#pragma once

#include "schemalink/pathfinder.hpp"
#include "schemalink/schema.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace schemalink {

struct TableReferenceSet {
    TableSet tables;                     // schema casing
    std::vector<std::string> unresolved; // raw names that match no table and no CTE
};

/// Base tables named in any FROM or JOIN clause, at any nesting depth.
///
/// WITH-clause names are excluded, aliases and identifier quoting (`"t"`,
/// `` `t` ``, `[t]`) are stripped, and `schema.table` keeps only the table part.
/// Throws PARSE_ERROR when the text has no FROM clause at all or is lexically broken.
TableReferenceSet extract_tables(std::string_view sql, const Schema& schema);

/// Prompt serialization restricted to `chosen_tables` and the given FK lines.
/// Throws UNKNOWN_TABLE when a chosen table is not in the schema.
std::string render_filtered_schema(const Schema& schema, const TableSet& chosen_tables,
                                   const std::vector<ForeignKeyEdge>& induced_fk_edges);

/// `T1 -> T2 -> T3 (T1.a = T2.b, T2.c = T3.d)` for a chosen path; for a union
/// selection the table list followed by one join condition per line.
std::string render_join_path(const LinkResult& result);

} // namespace schemalink
