#include "schemalink/sql_analysis.hpp"
#include "schemalink/error.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace schemalink {

namespace {

enum class TokenKind { Word, QuotedIdent, String, Number, Symbol };

struct Token {
    TokenKind kind;
    std::string text; // unquoted content for identifiers, raw char for symbols
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (c & 0x80); }
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$'; }

std::vector<Token> tokenize(std::string_view sql) {
    std::vector<Token> out;
    std::size_t i = 0;
    const auto n = sql.size();

    auto quoted = [&](char close, TokenKind kind, bool doubled_escape) {
        const auto start = i;
        std::string text;
        ++i;
        while (true) {
            if (i >= n)
                throw Error(ErrorCode::ParseError, "unterminated quote starting at offset " + std::to_string(start));
            if (sql[i] == close) {
                if (doubled_escape && i + 1 < n && sql[i + 1] == close) {
                    text.push_back(close);
                    i += 2;
                    continue;
                }
                ++i;
                break;
            }
            text.push_back(sql[i++]);
        }
        out.push_back({kind, std::move(text)});
    };

    while (i < n) {
        const char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
            while (i < n && sql[i] != '\n')
                ++i;
        } else if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
            const auto end = sql.find("*/", i + 2);
            i = end == std::string_view::npos ? n : end + 2;
        } else if (c == '\'') {
            quoted('\'', TokenKind::String, true);
        } else if (c == '"') {
            quoted('"', TokenKind::QuotedIdent, true);
        } else if (c == '`') {
            quoted('`', TokenKind::QuotedIdent, true);
        } else if (c == '[') {
            quoted(']', TokenKind::QuotedIdent, false);
        } else if (ident_start(c)) {
            const auto start = i;
            while (i < n && ident_char(sql[i]))
                ++i;
            out.push_back({TokenKind::Word, std::string(sql.substr(start, i - start))});
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            const auto start = i;
            while (i < n && (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '.'))
                ++i;
            out.push_back({TokenKind::Number, std::string(sql.substr(start, i - start))});
        } else {
            out.push_back({TokenKind::Symbol, std::string(1, c)});
            ++i;
        }
    }
    return out;
}

bool is_word(const Token& t, std::string_view upper) { return t.kind == TokenKind::Word && iequals(t.text, upper); }
bool is_symbol(const Token& t, char c) { return t.kind == TokenKind::Symbol && t.text[0] == c; }
bool is_identifier(const Token& t) { return t.kind == TokenKind::Word || t.kind == TokenKind::QuotedIdent; }

std::size_t matching_paren(const std::vector<Token>& toks, std::size_t open) {
    int depth = 0;
    for (auto i = open; i < toks.size(); ++i) {
        if (is_symbol(toks[i], '('))
            ++depth;
        else if (is_symbol(toks[i], ')') && --depth == 0)
            return i;
    }
    throw Error(ErrorCode::ParseError, "unbalanced parentheses");
}

struct CteDefinition {
    std::string name; // lowercased
    std::size_t name_pos;
    std::size_t body_begin;
    std::size_t body_end;
    bool recursive;
};

std::vector<CteDefinition> find_ctes(const std::vector<Token>& toks) {
    std::vector<CteDefinition> out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (!is_word(toks[i], "WITH"))
            continue;
        auto j = i + 1;
        bool recursive = false;
        if (j < toks.size() && is_word(toks[j], "RECURSIVE")) {
            recursive = true;
            ++j;
        }
        while (j < toks.size() && is_identifier(toks[j])) {
            const auto name_pos = j++;
            if (j < toks.size() && is_symbol(toks[j], '('))
                j = matching_paren(toks, j) + 1;
            if (j >= toks.size() || !is_word(toks[j], "AS"))
                break;
            ++j;
            if (j < toks.size() && is_word(toks[j], "NOT"))
                ++j;
            if (j < toks.size() && is_word(toks[j], "MATERIALIZED"))
                ++j;
            if (j >= toks.size() || !is_symbol(toks[j], '('))
                break;
            const auto close = matching_paren(toks, j);
            out.push_back({to_lower(toks[name_pos].text), name_pos, j, close, recursive});
            j = close + 1;
            if (j < toks.size() && is_symbol(toks[j], ','))
                ++j;
            else
                break;
        }
    }
    return out;
}

bool refers_to_cte(const std::vector<CteDefinition>& ctes, std::string_view name, std::size_t pos) {
    const auto lowered = to_lower(name);
    for (const auto& cte : ctes) {
        if (cte.name != lowered || pos <= cte.name_pos)
            continue;
        const bool inside_own_body = pos > cte.body_begin && pos < cte.body_end;
        if (!inside_own_body || cte.recursive)
            return true;
    }
    return false;
}

// Keywords that end a FROM item list at the current nesting level.
const std::unordered_set<std::string> kClauseEnders = {
    "where", "group", "order", "having", "limit", "union", "intersect", "except", "select", "window",
    "values", "set", "returning", "offset", "case", "when", "then", "else", "end"};

} // namespace

TableReferenceSet extract_tables(std::string_view sql, const Schema& schema) {
    const auto toks = tokenize(sql);
    const auto ctes = find_ctes(toks);

    struct Level {
        bool in_from = false;
    };
    std::vector<Level> levels(1);
    bool expect_item = false;
    bool saw_from = false;

    TableReferenceSet out;
    auto record = [&](const std::string& name, std::size_t pos) {
        if (auto canonical = schema.canonical_table(name)) {
            // A CTE may shadow a base table of the same name.
            if (!refers_to_cte(ctes, name, pos))
                out.tables.insert(*canonical);
            return;
        }
        if (refers_to_cte(ctes, name, pos))
            return;
        if (std::find(out.unresolved.begin(), out.unresolved.end(), name) == out.unresolved.end())
            out.unresolved.push_back(name);
    };

    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];

        if (is_symbol(t, '(')) {
            const bool item_paren = expect_item;
            const bool subquery = i + 1 < toks.size() &&
                                  (is_word(toks[i + 1], "SELECT") || is_word(toks[i + 1], "WITH") ||
                                   is_word(toks[i + 1], "VALUES"));
            levels.push_back(Level{item_paren && !subquery});
            expect_item = item_paren && !subquery;
            continue;
        }
        if (is_symbol(t, ')')) {
            if (levels.size() == 1)
                throw Error(ErrorCode::ParseError, "unbalanced parentheses");
            levels.pop_back();
            expect_item = false;
            continue;
        }
        if (is_symbol(t, ',')) {
            expect_item = levels.back().in_from;
            continue;
        }

        if (t.kind == TokenKind::Word) {
            const auto kw = to_lower(t.text);
            if (kw == "from") {
                if (i >= 2 && is_word(toks[i - 1], "DISTINCT") &&
                    (is_word(toks[i - 2], "IS") || is_word(toks[i - 2], "NOT")))
                    continue;
                saw_from = true;
                levels.back().in_from = true;
                expect_item = true;
                continue;
            }
            if (kw == "join") {
                levels.back().in_from = true;
                expect_item = true;
                continue;
            }
            if (kw == "on" || kw == "using") {
                expect_item = false;
                continue;
            }
            if (kClauseEnders.count(kw)) {
                levels.back().in_from = false;
                expect_item = false;
                continue;
            }
            if (expect_item && (kw == "lateral" || kw == "only"))
                continue;
        }

        if (expect_item && is_identifier(t)) {
            auto name_pos = i;
            // schema.table keeps only the table part
            while (name_pos + 2 < toks.size() && is_symbol(toks[name_pos + 1], '.') &&
                   is_identifier(toks[name_pos + 2]))
                name_pos += 2;
            i = name_pos;
            expect_item = false;
            if (i + 1 < toks.size() && is_symbol(toks[i + 1], '('))
                continue; // table-valued function
            record(toks[name_pos].text, name_pos);
            continue;
        }
        expect_item = false;
    }

    if (levels.size() != 1)
        throw Error(ErrorCode::ParseError, "unbalanced parentheses");
    if (!saw_from)
        throw Error(ErrorCode::ParseError, "no FROM clause");
    return out;
}

std::string render_filtered_schema(const Schema& schema, const TableSet& chosen_tables,
                                   const std::vector<ForeignKeyEdge>& induced_fk_edges) {
    for (const auto& t : chosen_tables) {
        if (!schema.find_table(t))
            throw Error(ErrorCode::UnknownTable, t);
    }
    std::vector<ForeignKeyEdge> visible;
    for (const auto& fk : induced_fk_edges) {
        if (chosen_tables.count(fk.from_table) && chosen_tables.count(fk.to_table))
            visible.push_back(fk);
    }
    return render_schema_text(schema, chosen_tables, visible);
}

std::string render_join_path(const LinkResult& result) {
    if (result.chosen_path && result.chosen_path->length() > 0) {
        std::vector<std::string> conditions;
        for (const auto& hop : result.chosen_path_joins) {
            for (const auto& j : hop)
                conditions.push_back(j.join_condition());
        }
        auto out = join(result.chosen_path->tables, " -> ");
        if (!conditions.empty())
            out += " (" + join(conditions, ", ") + ")";
        return out;
    }
    if (result.chosen_tables.size() <= 1) {
        const std::string only = result.chosen_tables.empty() ? std::string() : *result.chosen_tables.begin();
        return only + " (no joins required)";
    }
    auto out = join(result.chosen_tables, ", ");
    for (const auto& fk : result.induced_fk_edges)
        out += "\n" + fk.join_condition();
    for (const auto& j : result.augmented_joins)
        out += "\n" + j.join_condition();
    return out;
}

} // namespace schemalink
