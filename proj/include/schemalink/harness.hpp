#pragma once

#include "schemalink/graph.hpp"
#include "schemalink/llm.hpp"
#include "schemalink/metrics.hpp"
#include "schemalink/pathfinder.hpp"
#include "schemalink/schema.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace schemalink {

struct Question {
    std::string question_id;
    std::string db_id;
    std::string text;
    std::optional<std::string> evidence;
    std::optional<std::string> gold_sql;
    Difficulty difficulty = Difficulty::Unknown;
};

/// Schemas under `<root>/<db_id>/<db_id>.sqlite` or `<root>/<db_id>/schema.json`,
/// loaded on first use and shared read-only afterwards.
class SchemaCatalog {
public:
    struct Entry {
        Schema schema;
        SchemaGraph graph; // augmented when sparse
        std::optional<std::filesystem::path> database; // SQLite file, when present
        std::vector<std::string> warnings;
    };

    explicit SchemaCatalog(std::filesystem::path root, IdColumnRule id_rule = IdColumnRule::TokenBoundary);

    bool contains(const std::string& db_id) const;
    const Entry& get(const std::string& db_id);
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    IdColumnRule id_rule_;
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<Entry>> entries_;
};

struct DatasetLoad {
    std::vector<Question> questions;
    std::vector<std::string> diagnostics;
};

/// Reads a BIRD-style JSON array (`question_id`, `db_id`, `question`, `evidence`,
/// `SQL`, `difficulty`). Rows whose database is missing are skipped with a
/// diagnostic. With `require_sql`, a row without `SQL` is a PARSE_ERROR.
DatasetLoad ingest_dataset(const std::filesystem::path& path, const std::filesystem::path& schema_root,
                           bool require_sql = false);

enum class RunStage { LinkOnly, LinkAndGenerate, Evaluate };

struct RunConfig {
    std::string mode = "mode7"; // mode1..mode7 or "baseline" (full schema, no linking)
    std::string linker_model;
    std::optional<std::string> generator_model;
    double linking_temperature = kLinkingTemperature;
    double generation_temperature = kGenerationTemperature;
    std::filesystem::path cache_path;
    CacheMode cache_mode = CacheMode::Replay;
    RunStage stage = RunStage::LinkOnly;
    std::size_t workers = 4;
};

struct RunSummary {
    std::size_t processed = 0;
    std::size_t skipped = 0; // already present in the output file
    std::size_t failed = 0;
    std::vector<std::string> diagnostics;
};

/// Links every question and appends one JSON line per question to `out`.
/// Questions already present in `out` are skipped. Per-row failures are written
/// inline; only an unwritable output is fatal.
RunSummary run_linking(const std::vector<Question>& questions, SchemaCatalog& catalog, const RunConfig& config,
                       CompletionClient* client, const std::filesystem::path& out);

/// Prompt 3 (or Prompt 4 with `baseline`) for every linked row of `link_output`.
/// `catalog` is needed only to render full schemas for `baseline` over non-baseline link rows.
RunSummary run_generation(const std::filesystem::path& link_output, const RunConfig& config,
                          CompletionClient& client, const std::filesystem::path& out, bool baseline = false,
                          SchemaCatalog* catalog = nullptr);

struct EvaluationOptions {
    bool execute = true;
    ExecutionOptions execution;
};

struct EvaluationReport {
    CorpusSummary summary;
    std::size_t questions = 0;
    std::size_t evaluated = 0;
    std::size_t extraction_failed = 0;
    std::size_t missing_rows = 0;
    std::size_t exec_evaluated = 0;
    std::size_t exec_matched = 0;
    std::size_t exec_gold_failed = 0;
    nlohmann::json summary_json;
    std::string csv;
};

/// Writes `summary.json` and `per_question.csv` into `report_dir`.
EvaluationReport run_evaluation(const std::filesystem::path& run_output, const std::vector<Question>& questions,
                                SchemaCatalog& catalog, const EvaluationOptions& options,
                                const std::filesystem::path& report_dir);

struct SweepResult {
    std::vector<std::pair<LinkerConfig, EvaluationReport>> modes;
    std::string grid_csv;
};

/// Runs `modes` over the same questions into `<out_dir>/<mode>.jsonl` and
/// `<out_dir>/<mode>/`, then writes `<out_dir>/comparison.csv`.
SweepResult run_sweep(const std::vector<Question>& questions, SchemaCatalog& catalog, const RunConfig& base,
                      CompletionClient& client, const std::vector<LinkerConfig>& modes,
                      const std::filesystem::path& out_dir);

/// Latest row per question_id from a JSON-lines run file (unparsable lines are ignored).
std::map<std::string, nlohmann::json> read_run_rows(const std::filesystem::path& path);

} // namespace schemalink
