#include "schemalink/metrics.hpp"
#include "schemalink/error.hpp"
#include "sqlite_handle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace schemalink {

double f_beta(std::size_t overlap, std::size_t gold_size, std::size_t predicted_size, double beta) {
    const double b2 = beta * beta;
    const double denom = b2 * static_cast<double>(gold_size) + static_cast<double>(predicted_size);
    if (denom == 0)
        return 0;
    return (1 + b2) * static_cast<double>(overlap) / denom;
}

double f_beta_from_pr(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    if (denom == 0)
        return 0;
    return (1 + b2) * precision * recall / denom;
}

SchemaMetrics schema_metrics(const TableSet& predicted, const TableSet& gold) {
    if (gold.empty())
        throw Error(ErrorCode::EmptyGold, "gold table set is empty");

    // TableSet already orders case-insensitively; fold to lowercase so that
    // differently cased duplicates collapse.
    std::set<std::string> p;
    std::set<std::string> g;
    for (const auto& t : predicted)
        p.insert(to_lower(t));
    for (const auto& t : gold)
        g.insert(to_lower(t));

    std::size_t overlap = 0;
    for (const auto& t : p)
        overlap += g.count(t);

    SchemaMetrics m;
    m.precision = p.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(p.size());
    m.recall = static_cast<double>(overlap) / static_cast<double>(g.size());
    m.f1 = f_beta(overlap, g.size(), p.size(), 1.0);
    m.f6 = f_beta(overlap, g.size(), p.size(), 6.0);
    m.exact_match = p == g;
    return m;
}

SchemaMetrics schema_metrics(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
    return schema_metrics(TableSet(predicted.begin(), predicted.end()), TableSet(gold.begin(), gold.end()));
}

std::string_view to_string(Difficulty d) {
    switch (d) {
    case Difficulty::Simple: return "simple";
    case Difficulty::Moderate: return "moderate";
    case Difficulty::Challenging: return "challenging";
    case Difficulty::Unknown: break;
    }
    return "unknown";
}

Difficulty parse_difficulty(std::string_view text) {
    const auto t = to_lower(trim(text));
    if (t == "simple")
        return Difficulty::Simple;
    if (t == "moderate")
        return Difficulty::Moderate;
    if (t == "challenging")
        return Difficulty::Challenging;
    return Difficulty::Unknown;
}

EvalRecord EvalRecord::make(std::string question_id, TableSet gold, TableSet predicted, Difficulty difficulty) {
    EvalRecord r;
    r.question_id = std::move(question_id);
    r.metrics = schema_metrics(predicted, gold);
    r.gold_tables = std::move(gold);
    r.predicted_tables = std::move(predicted);
    r.difficulty = difficulty;
    return r;
}

namespace {

MetricSummary summarize(const std::vector<const EvalRecord*>& records) {
    MetricSummary s;
    s.count = records.size();
    std::size_t exact = 0;
    std::size_t overlap = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
    for (const auto* r : records) {
        s.precision += r->metrics.precision;
        s.recall += r->metrics.recall;
        s.f1 += r->metrics.f1;
        s.f6 += r->metrics.f6;
        exact += r->metrics.exact_match ? 1 : 0;

        std::set<std::string> g;
        for (const auto& t : r->gold_tables)
            g.insert(to_lower(t));
        std::set<std::string> p;
        for (const auto& t : r->predicted_tables)
            p.insert(to_lower(t));
        for (const auto& t : p)
            overlap += g.count(t);
        predicted += p.size();
        gold += g.size();
    }
    const auto n = static_cast<double>(s.count);
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
    s.f6 /= n;
    s.exact_match_rate = static_cast<double>(exact) / n;
    s.f1_from_pr = f_beta_from_pr(s.precision, s.recall, 1.0);
    s.f6_from_pr = f_beta_from_pr(s.precision, s.recall, 6.0);
    s.micro_precision = predicted ? static_cast<double>(overlap) / static_cast<double>(predicted) : 0.0;
    s.micro_recall = gold ? static_cast<double>(overlap) / static_cast<double>(gold) : 0.0;
    s.micro_f1 = f_beta(overlap, gold, predicted, 1.0);
    s.micro_f6 = f_beta(overlap, gold, predicted, 6.0);
    return s;
}

} // namespace

CorpusSummary aggregate(const std::vector<EvalRecord>& records) {
    if (records.empty())
        throw Error(ErrorCode::EmptyInput, "no evaluation records");
    std::vector<const EvalRecord*> all;
    std::map<Difficulty, std::vector<const EvalRecord*>> groups;
    for (const auto& r : records) {
        all.push_back(&r);
        groups[r.difficulty].push_back(&r);
    }
    CorpusSummary out;
    out.overall = summarize(all);
    for (const auto& [d, group] : groups)
        out.by_difficulty[d] = summarize(group);
    return out;
}

// ---------------------------------------------------------------------------
// Execution accuracy
// ---------------------------------------------------------------------------

namespace {

struct Deadline {
    std::chrono::steady_clock::time_point at;
};

int check_deadline(void* arg) {
    const auto* d = static_cast<const Deadline*>(arg);
    return std::chrono::steady_clock::now() > d->at ? 1 : 0;
}

std::string encode_cell(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_NULL: return "N";
    case SQLITE_INTEGER: return "I" + std::to_string(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT: {
        const double v = sqlite3_column_double(stmt, col);
        // 1 and 1.0 compare equal, as they do in the reference evaluator.
        if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.0e15)
            return "I" + std::to_string(static_cast<long long>(v));
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string("R") + buf;
    }
    case SQLITE_BLOB: {
        const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt, col));
        return "B" + std::string(data ? data : "", static_cast<std::size_t>(sqlite3_column_bytes(stmt, col)));
    }
    default: return "T" + detail::column_text(stmt, col);
    }
}

// Sorted encoded rows, or nullopt (with `error`) when the statement fails.
std::optional<std::vector<std::string>> run_query(sqlite3* db, std::string_view sql,
                                                  std::chrono::milliseconds timeout, std::string& error) {
    auto stmt = detail::prepare(db, sql, &error);
    if (!stmt) {
        if (error.empty())
            error = "empty statement";
        return std::nullopt;
    }
    Deadline deadline{std::chrono::steady_clock::now() + timeout};
    sqlite3_progress_handler(db, 1000, check_deadline, &deadline);

    std::vector<std::string> rows;
    const int cols = sqlite3_column_count(stmt.get());
    int rc = SQLITE_ROW;
    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
        std::string row;
        for (int c = 0; c < cols; ++c) {
            auto cell = encode_cell(stmt.get(), c);
            row += std::to_string(cell.size());
            row += ':';
            row += cell;
        }
        rows.push_back(std::move(row));
    }
    sqlite3_progress_handler(db, 0, nullptr, nullptr);
    if (rc != SQLITE_DONE) {
        error = rc == SQLITE_INTERRUPT ? "timeout" : sqlite3_errmsg(db);
        return std::nullopt;
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

} // namespace

bool execution_match(std::string_view predicted_sql, std::string_view gold_sql,
                     const std::filesystem::path& database, const ExecutionOptions& options) {
    if (!std::filesystem::exists(database))
        throw Error(ErrorCode::FileNotFound, database.string());
    auto db = detail::open_readonly(database);

    std::string error;
    auto gold = run_query(db.get(), gold_sql, options.timeout, error);
    if (!gold)
        throw Error(ErrorCode::GoldExecutionFailed, error);

    error.clear();
    auto predicted = run_query(db.get(), predicted_sql, options.timeout, error);
    return predicted && *predicted == *gold;
}

} // namespace schemalink
