#include "schemalink/harness.hpp"
#include "schemalink/error.hpp"
#include "schemalink/sql_analysis.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace schemalink {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Schema catalog
// ---------------------------------------------------------------------------

namespace {

std::optional<fs::path> sqlite_path(const fs::path& root, const std::string& db_id) {
    auto p = root / db_id / (db_id + ".sqlite");
    if (fs::exists(p))
        return p;
    return std::nullopt;
}

std::optional<fs::path> document_path(const fs::path& root, const std::string& db_id) {
    auto p = root / db_id / "schema.json";
    if (fs::exists(p))
        return p;
    return std::nullopt;
}

} // namespace

SchemaCatalog::SchemaCatalog(fs::path root, IdColumnRule id_rule) : root_(std::move(root)), id_rule_(id_rule) {}

bool SchemaCatalog::contains(const std::string& db_id) const {
    return sqlite_path(root_, db_id) || document_path(root_, db_id);
}

const SchemaCatalog::Entry& SchemaCatalog::get(const std::string& db_id) {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(db_id); it != entries_.end())
        return *it->second;

    auto entry = std::make_unique<Entry>();
    if (auto db = sqlite_path(root_, db_id)) {
        entry->schema = ingest_sqlite(*db, &entry->warnings);
        entry->schema.database_id = db_id;
        entry->database = *db;
    } else if (auto doc = document_path(root_, db_id)) {
        entry->schema = ingest_schema_document(*doc);
    } else {
        throw Error(ErrorCode::FileNotFound, "no schema for database '" + db_id + "' under " + root_.string());
    }
    entry->graph = augment_sparse_graph(build_graph(entry->schema), entry->schema, id_rule_);
    const auto& ref = *entry;
    entries_.emplace(db_id, std::move(entry));
    return ref;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

namespace {

std::string json_scalar_string(const json& v) {
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number_integer())
        return std::to_string(v.get<long long>());
    return v.dump();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::FileNotFound, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

DatasetLoad ingest_dataset(const fs::path& path, const fs::path& schema_root, bool require_sql) {
    json rows;
    try {
        rows = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    if (!rows.is_array())
        throw Error(ErrorCode::ParseError, path.string() + ": expected a JSON array of questions");
    if (!fs::is_directory(schema_root))
        throw Error(ErrorCode::NoSchemasFound, schema_root.string() + " is not a directory");

    SchemaCatalog probe(schema_root);
    DatasetLoad out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = path.filename().string() + " row " + std::to_string(i);
        if (!row.is_object())
            throw Error(ErrorCode::ParseError, where + ": expected an object");
        for (const char* key : {"db_id", "question"}) {
            if (!row.contains(key) || !row[key].is_string())
                throw Error(ErrorCode::ParseError, where + ": missing string field '" + key + "'");
        }

        Question q;
        q.question_id = row.contains("question_id") ? json_scalar_string(row["question_id"]) : std::to_string(i);
        q.db_id = row["db_id"].get<std::string>();
        q.text = row["question"].get<std::string>();
        if (row.contains("evidence") && row["evidence"].is_string() && !row["evidence"].get<std::string>().empty())
            q.evidence = row["evidence"].get<std::string>();
        if (row.contains("SQL") && row["SQL"].is_string())
            q.gold_sql = row["SQL"].get<std::string>();
        else if (require_sql)
            throw Error(ErrorCode::ParseError, where + " (question_id " + q.question_id + "): missing field 'SQL'");
        if (row.contains("difficulty") && row["difficulty"].is_string())
            q.difficulty = parse_difficulty(row["difficulty"].get<std::string>());

        if (!probe.contains(q.db_id)) {
            out.diagnostics.push_back("question " + q.question_id + ": database '" + q.db_id +
                                      "' not found; row skipped");
            continue;
        }
        out.questions.push_back(std::move(q));
    }
    if (out.questions.empty() && !rows.empty())
        throw Error(ErrorCode::NoSchemasFound, "no dataset row has a schema under " + schema_root.string());
    return out;
}

// ---------------------------------------------------------------------------
// Run files
// ---------------------------------------------------------------------------

std::map<std::string, json> read_run_rows(const fs::path& path) {
    std::map<std::string, json> rows;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        try {
            auto j = json::parse(line);
            if (j.is_object() && j.contains("question_id")) {
                auto id = json_scalar_string(j["question_id"]);
                rows[id] = std::move(j);
            }
        } catch (const json::parse_error&) {
            // truncated line from an interrupted run
        }
    }
    return rows;
}

namespace {

/// Appends rows in submission order no matter which worker finishes first.
class OrderedWriter {
public:
    OrderedWriter(const fs::path& path, std::size_t count) : slots_(count) {
        bool needs_newline = false;
        if (fs::exists(path) && fs::file_size(path) > 0) {
            std::ifstream in(path, std::ios::binary);
            in.seekg(-1, std::ios::end);
            char last = '\n';
            in.get(last);
            needs_newline = last != '\n';
        }
        if (path.has_parent_path())
            fs::create_directories(path.parent_path());
        out_.open(path, std::ios::app | std::ios::binary);
        if (!out_)
            throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
        if (needs_newline)
            out_ << '\n';
    }

    void put(std::size_t index, json row) {
        std::lock_guard lock(mutex_);
        slots_[index] = std::move(row);
        while (next_ < slots_.size() && slots_[next_]) {
            out_ << slots_[next_]->dump() << '\n';
            out_.flush();
            if (!out_)
                throw Error(ErrorCode::IoError, "write failed");
            slots_[next_].reset();
            ++next_;
        }
    }

private:
    std::ofstream out_;
    std::mutex mutex_;
    std::vector<std::optional<json>> slots_;
    std::size_t next_ = 0;
};

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : threads)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

json fk_json(const std::vector<ForeignKeyEdge>& edges) {
    json out = json::array();
    for (const auto& fk : edges) {
        out.push_back({{"from_table", fk.from_table},
                       {"from_column", fk.from_column},
                       {"to_table", fk.to_table},
                       {"to_column", fk.to_column},
                       {"provenance", to_string(fk.provenance)}});
    }
    return out;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json link_row(const Question& q, const std::string& mode, const Schema& schema, const LinkResult& r) {
    json paths = json::array();
    for (const auto& p : r.candidates.paths)
        paths.push_back(p.tables);
    return {{"question_id", q.question_id},
            {"db_id", q.db_id},
            {"mode", mode},
            {"question", q.text},
            {"evidence", optional_string(q.evidence)},
            {"status", "ok"},
            {"sources", r.sources},
            {"destinations", r.destinations},
            {"candidates", std::move(paths)},
            {"union_tables", std::vector<std::string>(r.candidates.union_tables.begin(),
                                                      r.candidates.union_tables.end())},
            {"union_connected", r.candidates.union_connected},
            {"chosen_tables", std::vector<std::string>(r.chosen_tables.begin(), r.chosen_tables.end())},
            {"chosen_path_id", r.chosen_path_id ? json(*r.chosen_path_id) : json(nullptr)},
            {"induced_fk_edges", fk_json(r.induced_fk_edges)},
            {"degraded", r.degraded},
            {"endpoint_calls", r.endpoint_calls},
            {"path_select_calls", r.path_select_calls},
            {"warnings", r.warnings},
            {"linked_schema", render_filtered_schema(schema, r.chosen_tables, r.induced_fk_edges)},
            {"join_path", render_join_path(r)}};
}

json error_row(const Question& q, const std::string& mode, const std::exception& e) {
    std::string code = "INTERNAL";
    if (const auto* err = dynamic_cast<const Error*>(&e))
        code = std::string(to_string(err->code()));
    return {{"question_id", q.question_id},
            {"db_id", q.db_id},
            {"mode", mode},
            {"question", q.text},
            {"evidence", optional_string(q.evidence)},
            {"status", "error"},
            {"error_code", code},
            {"error", e.what()}};
}

} // namespace

RunSummary run_linking(const std::vector<Question>& questions, SchemaCatalog& catalog, const RunConfig& config,
                       CompletionClient* client, const fs::path& out) {
    const bool baseline = to_lower(config.mode) == "baseline";
    std::optional<LinkerConfig> linker;
    if (!baseline) {
        linker = LinkerConfig::parse(config.mode);
        if (!client)
            throw Error(ErrorCode::ConfigError, "linking needs a completion client");
    }
    const std::string mode_name = baseline ? "baseline" : linker->name();

    RunSummary summary;
    const auto existing = read_run_rows(out);
    std::vector<const Question*> todo;
    for (const auto& q : questions) {
        if (existing.count(q.question_id))
            ++summary.skipped;
        else
            todo.push_back(&q);
    }

    OrderedWriter writer(out, todo.size());
    std::atomic<std::size_t> failed{0};
    parallel_for(todo.size(), config.workers, [&](std::size_t i) {
        const auto& q = *todo[i];
        json row;
        try {
            const auto& entry = catalog.get(q.db_id);
            if (baseline) {
                LinkResult r;
                r.chosen_tables = entry.schema.table_names();
                r.induced_fk_edges = entry.schema.foreign_keys;
                row = link_row(q, mode_name, entry.schema, r);
                row["join_path"] = nullptr;
            } else {
                LlmLinkerOptions opts{config.linker_model, config.linking_temperature, 1};
                auto endpoints = make_endpoint_oracle(*client, entry.schema, opts);
                auto selector = make_path_oracle(*client, entry.schema, entry.graph, opts);
                TokenUsage usage;
                UsageScope scope(usage);
                auto result = link(LinkQuery{q.text, q.evidence}, entry.schema, entry.graph, *linker, endpoints,
                                   selector);
                row = link_row(q, mode_name, entry.schema, result);
                if (usage.reported) {
                    row["tokens"] = {{"prompt", usage.prompt_tokens}, {"completion", usage.completion_tokens}};
                }
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IoError)
                throw;
            row = error_row(q, mode_name, e);
            ++failed;
        } catch (const std::exception& e) {
            row = error_row(q, mode_name, e);
            ++failed;
        }
        writer.put(i, std::move(row));
    });
    summary.processed = todo.size();
    summary.failed = failed;
    return summary;
}

RunSummary run_generation(const fs::path& link_output, const RunConfig& config, CompletionClient& client,
                          const fs::path& out, bool baseline, SchemaCatalog* catalog) {
    if (!fs::exists(link_output))
        throw Error(ErrorCode::FileNotFound, link_output.string());
    if (!config.generator_model || config.generator_model->empty())
        throw Error(ErrorCode::ConfigError, "generation needs a generator model");

    const auto rows = read_run_rows(link_output);
    const auto existing = read_run_rows(out);

    // Keep the link file order for the output.
    std::vector<std::string> order;
    {
        std::set<std::string> seen;
        std::ifstream in(link_output);
        std::string line;
        while (std::getline(in, line)) {
            try {
                auto j = json::parse(line);
                auto id = json_scalar_string(j.at("question_id"));
                if (seen.insert(id).second)
                    order.push_back(id);
            } catch (const json::exception&) {
            }
        }
    }

    RunSummary summary;
    std::vector<const json*> todo;
    for (const auto& id : order) {
        if (existing.count(id))
            ++summary.skipped;
        else
            todo.push_back(&rows.at(id));
    }

    OrderedWriter writer(out, todo.size());
    std::atomic<std::size_t> failed{0};
    parallel_for(todo.size(), config.workers, [&](std::size_t i) {
        json row = *todo[i];
        row["generator_model"] = *config.generator_model;
        row["predicted_sql"] = nullptr;
        try {
            if (row.value("status", "") != "ok")
                throw Error(ErrorCode::ConfigError, "link row failed: " + row.value("error", std::string()));

            const auto question = row.at("question").get<std::string>();
            std::optional<std::string> evidence;
            if (row.contains("evidence") && row["evidence"].is_string())
                evidence = row["evidence"].get<std::string>();

            const bool row_is_baseline = row.value("mode", "") == "baseline";
            std::string schema_text;
            std::optional<std::string> join_path;
            if (baseline || row_is_baseline) {
                if (row_is_baseline) {
                    schema_text = row.at("linked_schema").get<std::string>();
                } else {
                    if (!catalog)
                        throw Error(ErrorCode::ConfigError, "baseline generation over linked rows needs --schemas");
                    schema_text = render_schema_text(catalog->get(row.at("db_id").get<std::string>()).schema);
                }
            } else {
                schema_text = row.at("linked_schema").get<std::string>();
                join_path = row.at("join_path").get<std::string>();
            }

            auto request = render_sql_prompt(question, schema_text, join_path, evidence, *config.generator_model,
                                             config.generation_temperature);
            TokenUsage usage;
            UsageScope scope(usage);
            const auto reply = client.complete(request).text;
            row["generation_prompt"] = join_path ? "linked" : "baseline";
            if (auto sql = extract_sql(reply)) {
                row["predicted_sql"] = *sql;
                row["generation_status"] = "ok";
            } else {
                row["generation_status"] = "GENERATION_FAILED";
                ++failed;
            }
            if (usage.reported) {
                row["generation_tokens"] = {{"prompt", usage.prompt_tokens}, {"completion", usage.completion_tokens}};
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IoError)
                throw;
            row["generation_status"] = "error";
            row["generation_error"] = e.what();
            ++failed;
        }
        writer.put(i, std::move(row));
    });
    summary.processed = todo.size();
    summary.failed = failed;
    return summary;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

json summary_json(const MetricSummary& s) {
    return {{"count", s.count},
            {"exact_match_rate", s.exact_match_rate},
            {"precision", s.precision},
            {"recall", s.recall},
            {"f1", s.f1},
            {"f6", s.f6},
            {"f1_from_pr", s.f1_from_pr},
            {"f6_from_pr", s.f6_from_pr},
            {"micro", {{"precision", s.micro_precision},
                       {"recall", s.micro_recall},
                       {"f1", s.micro_f1},
                       {"f6", s.micro_f6}}}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "write failed on " + path.string());
}

} // namespace

EvaluationReport run_evaluation(const fs::path& run_output, const std::vector<Question>& questions,
                                SchemaCatalog& catalog, const EvaluationOptions& options,
                                const fs::path& report_dir) {
    if (!fs::exists(run_output))
        throw Error(ErrorCode::FileNotFound, run_output.string());
    const auto rows = read_run_rows(run_output);

    EvaluationReport report;
    report.questions = questions.size();
    std::vector<EvalRecord> records;
    std::vector<std::string> extraction_failures;
    std::map<Difficulty, std::pair<std::size_t, std::size_t>> exec_by_difficulty; // evaluated, matched

    std::string csv = "question_id,db_id,difficulty,gold_tables,predicted_tables,precision,recall,f1,f6,"
                      "exact_match,exec_match\n";

    for (const auto& q : questions) {
        const auto row_it = rows.find(q.question_id);
        if (row_it == rows.end()) {
            ++report.missing_rows;
            continue;
        }
        const auto& row = row_it->second;
        const auto& entry = catalog.get(q.db_id);

        TableSet gold;
        try {
            if (!q.gold_sql)
                throw Error(ErrorCode::ParseError, "no gold SQL");
            gold = extract_tables(*q.gold_sql, entry.schema).tables;
            if (gold.empty())
                throw Error(ErrorCode::ParseError, "gold SQL references no schema table");
        } catch (const Error& e) {
            ++report.extraction_failed;
            extraction_failures.push_back(q.question_id + ": " + e.what());
            continue;
        }

        TableSet predicted;
        if (row.value("status", "") == "ok" && row.contains("chosen_tables")) {
            for (const auto& t : row["chosen_tables"])
                predicted.insert(t.get<std::string>());
        }
        auto record = EvalRecord::make(q.question_id, gold, predicted, q.difficulty);

        std::string exec_cell;
        if (options.execute && row.contains("predicted_sql") && entry.database) {
            bool match = false;
            bool counted = true;
            if (row["predicted_sql"].is_string()) {
                try {
                    match = execution_match(row["predicted_sql"].get<std::string>(), *q.gold_sql, *entry.database,
                                            options.execution);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::GoldExecutionFailed)
                        throw;
                    ++report.exec_gold_failed;
                    counted = false;
                }
            }
            if (counted) {
                ++report.exec_evaluated;
                report.exec_matched += match ? 1 : 0;
                auto& bucket = exec_by_difficulty[q.difficulty];
                ++bucket.first;
                bucket.second += match ? 1 : 0;
                exec_cell = match ? "true" : "false";
            }
        }

        const auto& m = record.metrics;
        csv += csv_field(q.question_id) + "," + csv_field(q.db_id) + "," + std::string(to_string(q.difficulty)) +
               "," + csv_field(join(gold, ";")) + "," + csv_field(join(predicted, ";")) + "," + fixed(m.precision) +
               "," + fixed(m.recall) + "," + fixed(m.f1) + "," + fixed(m.f6) + "," +
               (m.exact_match ? "true" : "false") + "," + exec_cell + "\n";
        records.push_back(std::move(record));
    }

    report.evaluated = records.size();
    json summary = {{"run_output", run_output.filename().string()},
                    {"questions", report.questions},
                    {"evaluated", report.evaluated},
                    {"missing_rows", report.missing_rows},
                    {"extraction_failed", report.extraction_failed},
                    {"extraction_failures", extraction_failures}};
    if (!records.empty()) {
        report.summary = aggregate(records);
        summary["overall"] = summary_json(report.summary.overall);
        json by = json::object();
        for (const auto& [d, s] : report.summary.by_difficulty)
            by[std::string(to_string(d))] = summary_json(s);
        summary["by_difficulty"] = std::move(by);
    }
    if (options.execute) {
        json exec = {{"evaluated", report.exec_evaluated},
                     {"matched", report.exec_matched},
                     {"gold_failed", report.exec_gold_failed},
                     {"accuracy", report.exec_evaluated
                                      ? static_cast<double>(report.exec_matched) / report.exec_evaluated
                                      : 0.0}};
        json by = json::object();
        for (const auto& [d, counts] : exec_by_difficulty) {
            by[std::string(to_string(d))] = {
                {"evaluated", counts.first},
                {"matched", counts.second},
                {"accuracy", counts.first ? static_cast<double>(counts.second) / counts.first : 0.0}};
        }
        exec["by_difficulty"] = std::move(by);
        summary["execution"] = std::move(exec);
    }
    report.summary_json = std::move(summary);
    report.csv = std::move(csv);

    fs::create_directories(report_dir);
    write_text(report_dir / "summary.json", report.summary_json.dump(2) + "\n");
    write_text(report_dir / "per_question.csv", report.csv);
    return report;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

SweepResult run_sweep(const std::vector<Question>& questions, SchemaCatalog& catalog, const RunConfig& base,
                      CompletionClient& client, const std::vector<LinkerConfig>& modes, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    SweepResult result;
    result.grid_csv = "method,mode,emr,precision,recall,f1,f6\n";
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
        return std::string(buf);
    };
    for (const auto& mode : modes) {
        RunConfig cfg = base;
        cfg.mode = mode.name();
        const auto run_file = out_dir / (mode.name() + ".jsonl");
        run_linking(questions, catalog, cfg, &client, run_file);
        auto report = run_evaluation(run_file, questions, catalog, EvaluationOptions{false, {}}, out_dir / mode.name());
        const auto& s = report.summary.overall;
        result.grid_csv += std::string(mode.label()) + "," + mode.name() + "," + pct(s.exact_match_rate) + "," +
                           pct(s.precision) + "," + pct(s.recall) + "," + pct(s.f1) + "," + pct(s.f6) + "\n";
        result.modes.emplace_back(mode, std::move(report));
    }
    write_text(out_dir / "comparison.csv", result.grid_csv);
    return result;
}

} // namespace schemalink
