#include "schemalink/schema.hpp"
#include "schemalink/error.hpp"
#include "sqlite_handle.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace schemalink {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(EdgeProvenance p) {
    return p == EdgeProvenance::DeclaredFk ? "DECLARED_FK" : "ID_AUGMENTED";
}

std::string ForeignKeyEdge::join_condition() const {
    return from_table + "." + from_column + " = " + to_table + "." + to_column;
}

const ColumnDef* TableDef::find_column(std::string_view column) const {
    for (const auto& c : columns) {
        if (iequals(c.name, column))
            return &c;
    }
    return nullptr;
}

const TableDef* Schema::find_table(std::string_view name) const {
    for (const auto& t : tables) {
        if (iequals(t.name, name))
            return &t;
    }
    return nullptr;
}

std::optional<std::string> Schema::canonical_table(std::string_view name) const {
    if (const auto* t = find_table(name))
        return t->name;
    return std::nullopt;
}

TableSet Schema::table_names() const {
    TableSet out;
    for (const auto& t : tables)
        out.insert(t.name);
    return out;
}

void Schema::validate() const {
    std::map<std::string, std::string> seen;
    for (const auto& t : tables) {
        if (trim(t.name).empty())
            throw Error(ErrorCode::MalformedSchema, "table with empty name");
        auto [it, inserted] = seen.emplace(to_lower(t.name), t.name);
        if (!inserted)
            throw Error(ErrorCode::DuplicateTable, "'" + t.name + "' collides with '" + it->second + "'");
        std::map<std::string, std::string> cols;
        for (const auto& c : t.columns) {
            if (trim(c.name).empty())
                throw Error(ErrorCode::MalformedSchema, "table '" + t.name + "' has a column with an empty name");
            if (!cols.emplace(to_lower(c.name), c.name).second)
                throw Error(ErrorCode::MalformedSchema, "table '" + t.name + "' repeats column '" + c.name + "'");
        }
    }
    for (const auto& fk : foreign_keys) {
        const auto* from = find_table(fk.from_table);
        const auto* to = find_table(fk.to_table);
        if (!from || !to)
            throw Error(ErrorCode::DanglingFkReference, fk.join_condition() + ": unknown table");
        if (!from->find_column(fk.from_column) || !to->find_column(fk.to_column))
            throw Error(ErrorCode::DanglingFkReference, fk.join_condition() + ": unknown column");
    }
}

// ---------------------------------------------------------------------------
// SQLite ingestion
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<char, 16> kSqliteMagic = {'S', 'Q', 'L', 'i', 't', 'e', ' ', 'f',
                                               'o', 'r', 'm', 'a', 't', ' ', '3', '\0'};

struct RawForeignKey {
    std::string to_table;
    std::string from;
    std::optional<std::string> to; // NULL means the referenced table's primary key
    int id = 0;
    int seq = 0;
};

} // namespace

Schema ingest_sqlite(const fs::path& path, std::vector<std::string>* warnings) {
    std::error_code ec;
    if (!fs::exists(path, ec) || fs::is_directory(path, ec))
        throw Error(ErrorCode::FileNotFound, path.string());

    Schema schema;
    schema.database_id = path.stem().string();

    const auto size = fs::file_size(path, ec);
    if (ec)
        throw Error(ErrorCode::FileNotFound, path.string() + ": " + ec.message());
    if (size == 0)
        return schema;

    {
        std::ifstream in(path, std::ios::binary);
        std::array<char, 16> header{};
        if (!in.read(header.data(), header.size()) || header != kSqliteMagic)
            throw Error(ErrorCode::NotADatabase, path.string() + ": bad header");
    }

    auto db = detail::open_readonly(path);

    std::vector<std::string> names;
    {
        auto stmt = detail::prepare(db.get(), "SELECT name FROM sqlite_master WHERE type = 'table' "
                                              "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY rowid");
        while (sqlite3_step(stmt.get()) == SQLITE_ROW)
            names.push_back(detail::column_text(stmt.get(), 0));
    }

    for (const auto& name : names) {
        TableDef table{name, {}};
        auto stmt = detail::prepare(db.get(), "SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid");
        sqlite3_bind_text(stmt.get(), 1, name.c_str(), -1, SQLITE_TRANSIENT);
        while (sqlite3_step(stmt.get()) == SQLITE_ROW) {
            table.columns.push_back(ColumnDef{detail::column_text(stmt.get(), 0), detail::column_text(stmt.get(), 1),
                                              sqlite3_column_int(stmt.get(), 2) > 0});
        }
        schema.tables.push_back(std::move(table));
    }

    auto warn = [&](std::string msg) {
        if (warnings)
            warnings->push_back(std::move(msg));
    };

    for (const auto& table : schema.tables) {
        auto stmt = detail::prepare(db.get(), "SELECT \"table\", \"from\", \"to\", id, seq "
                                              "FROM pragma_foreign_key_list(?1) ORDER BY id, seq");
        sqlite3_bind_text(stmt.get(), 1, table.name.c_str(), -1, SQLITE_TRANSIENT);
        std::vector<RawForeignKey> raw;
        while (sqlite3_step(stmt.get()) == SQLITE_ROW) {
            RawForeignKey fk;
            fk.to_table = detail::column_text(stmt.get(), 0);
            fk.from = detail::column_text(stmt.get(), 1);
            if (sqlite3_column_type(stmt.get(), 2) != SQLITE_NULL)
                fk.to = detail::column_text(stmt.get(), 2);
            fk.id = sqlite3_column_int(stmt.get(), 3);
            fk.seq = sqlite3_column_int(stmt.get(), 4);
            raw.push_back(std::move(fk));
        }

        for (const auto& fk : raw) {
            const auto* from_col = table.find_column(fk.from);
            const auto* target = schema.find_table(fk.to_table);
            if (!target) {
                warn(table.name + "." + fk.from + " references missing table '" + fk.to_table + "'");
                continue;
            }
            const ColumnDef* to_col = nullptr;
            if (fk.to) {
                to_col = target->find_column(*fk.to);
            } else {
                // Implicit reference to the primary key; pick the seq-th PK column.
                int pk_index = 0;
                for (const auto& c : target->columns) {
                    if (c.is_primary_key && pk_index++ == fk.seq) {
                        to_col = &c;
                        break;
                    }
                }
            }
            if (!from_col || !to_col) {
                warn(table.name + "." + fk.from + " references missing column '" + fk.to.value_or("<pk>") +
                     "' of '" + target->name + "'");
                continue;
            }
            schema.foreign_keys.push_back(
                ForeignKeyEdge{table.name, from_col->name, target->name, to_col->name, EdgeProvenance::DeclaredFk});
        }
    }
    return schema;
}

// ---------------------------------------------------------------------------
// Schema document
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void field_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::ParseError, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object())
        field_error(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end())
        field_error(where, std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string())
        field_error(where + "." + key, "expected a string");
    return v.get<std::string>();
}

} // namespace

Schema parse_schema_document(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = text.substr(0, std::min<std::size_t>(e.byte, text.size()));
        const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }

    Schema schema;
    schema.database_id = require_string(doc, "db_id", "document");

    const auto& tables = require(doc, "tables", "document");
    if (!tables.is_array())
        field_error("tables", "expected an array");
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const std::string where = "tables[" + std::to_string(i) + "]";
        TableDef table{require_string(tables[i], "name", where), {}};
        const auto& columns = require(tables[i], "columns", where);
        if (!columns.is_array())
            field_error(where + ".columns", "expected an array");
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const std::string cwhere = where + ".columns[" + std::to_string(j) + "]";
            ColumnDef col{require_string(columns[j], "name", cwhere), "", false};
            if (auto it = columns[j].find("type"); it != columns[j].end() && !it->is_null()) {
                if (!it->is_string())
                    field_error(cwhere + ".type", "expected a string");
                col.declared_type = it->get<std::string>();
            }
            if (auto it = columns[j].find("primary_key"); it != columns[j].end() && !it->is_null()) {
                if (!it->is_boolean())
                    field_error(cwhere + ".primary_key", "expected a boolean");
                col.is_primary_key = it->get<bool>();
            }
            table.columns.push_back(std::move(col));
        }
        schema.tables.push_back(std::move(table));
    }

    if (auto it = doc.find("foreign_keys"); it != doc.end()) {
        if (!it->is_array())
            field_error("foreign_keys", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string where = "foreign_keys[" + std::to_string(i) + "]";
            const auto& fk = (*it)[i];
            schema.foreign_keys.push_back(ForeignKeyEdge{
                require_string(fk, "from_table", where), require_string(fk, "from_column", where),
                require_string(fk, "to_table", where), require_string(fk, "to_column", where),
                EdgeProvenance::DeclaredFk});
        }
    }

    schema.validate();

    // Names in FK records take the casing declared by their tables.
    for (auto& fk : schema.foreign_keys) {
        const auto* from = schema.find_table(fk.from_table);
        const auto* to = schema.find_table(fk.to_table);
        fk.from_column = from->find_column(fk.from_column)->name;
        fk.to_column = to->find_column(fk.to_column)->name;
        fk.from_table = from->name;
        fk.to_table = to->name;
    }
    return schema;
}

Schema ingest_schema_document(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_schema_document(buf.str());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError)
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        throw;
    }
}

json to_schema_document(const Schema& schema) {
    json tables = json::array();
    for (const auto& t : schema.tables) {
        json columns = json::array();
        for (const auto& c : t.columns)
            columns.push_back({{"name", c.name}, {"type", c.declared_type}, {"primary_key", c.is_primary_key}});
        tables.push_back({{"name", t.name}, {"columns", std::move(columns)}});
    }
    json fks = json::array();
    for (const auto& fk : schema.foreign_keys) {
        fks.push_back({{"from_table", fk.from_table},
                       {"from_column", fk.from_column},
                       {"to_table", fk.to_table},
                       {"to_column", fk.to_column}});
    }
    return {{"db_id", schema.database_id}, {"tables", std::move(tables)}, {"foreign_keys", std::move(fks)}};
}

void write_schema_document(const Schema& schema, const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << to_schema_document(schema).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Prompt serialization
// ---------------------------------------------------------------------------

namespace {

std::string quote_identifier(std::string_view name) {
    const bool plain = !name.empty() && !std::isdigit(static_cast<unsigned char>(name.front())) &&
                       std::all_of(name.begin(), name.end(), [](char c) {
                           return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                       });
    if (plain)
        return std::string(name);
    return "`" + std::string(name) + "`";
}

auto fk_key(const ForeignKeyEdge& fk) {
    return std::make_tuple(to_lower(fk.from_table), to_lower(fk.from_column), to_lower(fk.to_table),
                           to_lower(fk.to_column));
}

} // namespace

std::string render_schema_text(const Schema& schema, const TableSet& tables,
                               const std::vector<ForeignKeyEdge>& foreign_keys) {
    std::string out;
    for (const auto& name : tables) {
        const auto* table = schema.find_table(name);
        if (!table)
            throw Error(ErrorCode::UnknownTable, name);
        out += "CREATE TABLE " + quote_identifier(table->name) + " (\n";
        for (std::size_t i = 0; i < table->columns.size(); ++i) {
            const auto& c = table->columns[i];
            out += "  " + quote_identifier(c.name);
            if (!c.declared_type.empty())
                out += " " + c.declared_type;
            if (c.is_primary_key)
                out += " PRIMARY KEY";
            out += i + 1 < table->columns.size() ? ",\n" : "\n";
        }
        out += ");\n\n";
    }

    auto fks = foreign_keys;
    std::sort(fks.begin(), fks.end(), [](const auto& a, const auto& b) { return fk_key(a) < fk_key(b); });
    fks.erase(std::unique(fks.begin(), fks.end(), [](const auto& a, const auto& b) { return fk_key(a) == fk_key(b); }),
              fks.end());
    for (const auto& fk : fks) {
        out += "FOREIGN KEY " + quote_identifier(fk.from_table) + "." + quote_identifier(fk.from_column) +
               " REFERENCES " + quote_identifier(fk.to_table) + "." + quote_identifier(fk.to_column) + "\n";
    }
    return out;
}

std::string render_schema_text(const Schema& schema) {
    return render_schema_text(schema, schema.table_names(), schema.foreign_keys);
}

} // namespace schemalink
