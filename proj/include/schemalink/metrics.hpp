#pragma once

#include "schemalink/names.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace schemalink {

struct SchemaMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double f6 = 0;
    bool exact_match = false;

    bool operator==(const SchemaMetrics&) const = default;
};

/// (1 + beta^2) |P ∩ G| / (beta^2 |G| + |P|); 0 when both sets are empty.
double f_beta(std::size_t overlap, std::size_t gold_size, std::size_t predicted_size, double beta);
/// (1 + beta^2) P R / (beta^2 P + R); 0 when P = R = 0.
double f_beta_from_pr(double precision, double recall, double beta);

/// Names compare case-insensitively. Throws EMPTY_GOLD when `gold` is empty.
SchemaMetrics schema_metrics(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);
SchemaMetrics schema_metrics(const TableSet& predicted, const TableSet& gold);

enum class Difficulty { Simple, Moderate, Challenging, Unknown };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view text);

struct EvalRecord {
    std::string question_id;
    TableSet gold_tables;
    TableSet predicted_tables;
    SchemaMetrics metrics;
    Difficulty difficulty = Difficulty::Unknown;

    static EvalRecord make(std::string question_id, TableSet gold, TableSet predicted,
                           Difficulty difficulty = Difficulty::Unknown);
};

struct MetricSummary {
    std::size_t count = 0;
    double exact_match_rate = 0;
    // Macro averages over questions.
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double f6 = 0;
    // F-beta recomputed from the averaged precision/recall.
    double f1_from_pr = 0;
    double f6_from_pr = 0;
    // Micro (pooled-count) variants.
    double micro_precision = 0;
    double micro_recall = 0;
    double micro_f1 = 0;
    double micro_f6 = 0;
};

struct CorpusSummary {
    MetricSummary overall;
    std::map<Difficulty, MetricSummary> by_difficulty;
};

/// Throws EMPTY_INPUT when `records` is empty.
CorpusSummary aggregate(const std::vector<EvalRecord>& records);

// ---------------------------------------------------------------------------
// Execution accuracy
// ---------------------------------------------------------------------------

struct ExecutionOptions {
    std::chrono::milliseconds timeout{30000};
};

/// Runs both statements read-only on `database` and compares the result rows as
/// multisets (row order ignored). Failures on the predicted side return false;
/// a failing gold statement throws GOLD_EXECUTION_FAILED.
bool execution_match(std::string_view predicted_sql, std::string_view gold_sql,
                     const std::filesystem::path& database, const ExecutionOptions& options = {});

} // namespace schemalink
