#pragma once

#include "schemalink/names.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace schemalink {

struct ColumnDef {
    std::string name;
    std::string declared_type;
    bool is_primary_key = false;

    bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;

    const ColumnDef* find_column(std::string_view column) const;

    bool operator==(const TableDef&) const = default;
};

enum class EdgeProvenance { DeclaredFk, IdAugmented };

std::string_view to_string(EdgeProvenance p);

struct ForeignKeyEdge {
    std::string from_table;
    std::string from_column;
    std::string to_table;
    std::string to_column;
    EdgeProvenance provenance = EdgeProvenance::DeclaredFk;

    bool is_self_reference() const { return iequals(from_table, to_table); }
    // `from.col = to.col`
    std::string join_condition() const;

    bool operator==(const ForeignKeyEdge&) const = default;
};

/// A relational database schema: its tables (with columns) and declared foreign keys.
///
/// Table and column names keep their original casing; every lookup is
/// case-insensitive. Self-referencing foreign keys are kept here even though
/// the schema graph ignores them.
struct Schema {
    std::string database_id;
    std::vector<TableDef> tables;
    std::vector<ForeignKeyEdge> foreign_keys;

    const TableDef* find_table(std::string_view name) const;
    /// Canonical (schema-cased) name for `name`, if the table exists.
    std::optional<std::string> canonical_table(std::string_view name) const;
    TableSet table_names() const;

    /// Throws Error on invariant violations (duplicate tables or columns,
    /// empty names, FK endpoints that do not exist).
    void validate() const;

    bool operator==(const Schema&) const = default;
};

/// Reads every user table, its columns and declared foreign keys from a SQLite file.
/// Foreign keys that point at missing tables/columns are dropped and reported
/// through `warnings`.
Schema ingest_sqlite(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

// Schema document (JSON): {db_id, tables: [{name, columns: [{name, type, primary_key}]}],
// foreign_keys: [{from_table, from_column, to_table, to_column}]}
Schema parse_schema_document(std::string_view text);
Schema ingest_schema_document(const std::filesystem::path& path);
nlohmann::json to_schema_document(const Schema& schema);
void write_schema_document(const Schema& schema, const std::filesystem::path& path);

/// Deterministic DDL-like serialization used inside prompts.
///
/// One `CREATE TABLE` block per table in `tables` (lexicographic order), then
/// one `FOREIGN KEY` line per edge in `foreign_keys` (sorted). The caller decides
/// which tables and edges are visible.
std::string render_schema_text(const Schema& schema, const TableSet& tables,
                               const std::vector<ForeignKeyEdge>& foreign_keys);

/// The full-schema serialization: every table and every declared foreign key.
std::string render_schema_text(const Schema& schema);

} // namespace schemalink
