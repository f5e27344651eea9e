#pragma once

#include "schemalink/error.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include <sqlite3.h>

namespace schemalink::detail {

struct SqliteCloser {
    void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
};
struct StatementFinalizer {
    void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};

using SqliteDb = std::unique_ptr<sqlite3, SqliteCloser>;
using SqliteStatement = std::unique_ptr<sqlite3_stmt, StatementFinalizer>;

inline SqliteDb open_readonly(const std::filesystem::path& path) {
    sqlite3* raw = nullptr;
    const int rc = sqlite3_open_v2(path.c_str(), &raw, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
    SqliteDb db(raw);
    if (rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
        throw Error(ErrorCode::NotADatabase, path.string() + ": " + msg);
    }
    return db;
}

// Returns nullptr in `error` mode instead of throwing when `error` is given.
inline SqliteStatement prepare(sqlite3* db, std::string_view sql, std::string* error = nullptr) {
    sqlite3_stmt* raw = nullptr;
    const int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, nullptr);
    SqliteStatement stmt(raw);
    if (rc != SQLITE_OK) {
        if (error) {
            *error = sqlite3_errmsg(db);
            return nullptr;
        }
        throw Error(ErrorCode::MalformedSchema, sqlite3_errmsg(db));
    }
    return stmt;
}

inline std::string column_text(sqlite3_stmt* stmt, int col) {
    const auto* text = sqlite3_column_text(stmt, col);
    return text ? std::string(reinterpret_cast<const char*>(text)) : std::string();
}

} // namespace schemalink::detail
