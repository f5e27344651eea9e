#include "check_error.hpp"
#include "fixtures.hpp"

#include "schemalink/harness.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace schemalink;
using namespace schemalink::testing;
using nlohmann::json;

namespace {

struct Toy {
    TempDir dir;
    ToyCorpus corpus = write_toy_corpus(dir.path());
    ReplayCache cache;
    CallbackBackend backend{scripted_reply};
    CompletionClient client{cache, CacheMode::Record, &backend};
    SchemaCatalog catalog{corpus.schemas};

    std::vector<Question> questions(bool require_sql = true) {
        return ingest_dataset(corpus.dataset, corpus.schemas, require_sql).questions;
    }
    RunConfig config(const std::string& mode = "mode7") {
        RunConfig cfg;
        cfg.mode = mode;
        cfg.linker_model = "linker";
        cfg.generator_model = "generator";
        cfg.cache_mode = CacheMode::Record;
        return cfg;
    }
};

std::vector<json> lines_of(const std::filesystem::path& path) {
    std::vector<json> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line))
        out.push_back(json::parse(line));
    return out;
}

} // namespace

TEST(Dataset, LoadsRows) {
    Toy t;
    auto load = ingest_dataset(t.corpus.dataset, t.corpus.schemas, true);
    ASSERT_EQ(load.questions.size(), 10u);
    EXPECT_TRUE(load.diagnostics.empty());
    EXPECT_EQ(load.questions[0].question_id, "1");
    EXPECT_EQ(load.questions[0].difficulty, Difficulty::Simple);
    EXPECT_FALSE(load.questions[0].evidence.has_value());
    EXPECT_TRUE(load.questions[0].gold_sql.has_value());
}

TEST(Dataset, MissingDatabaseIsSkippedWithDiagnostic) {
    Toy t;
    write_text(t.dir / "mixed.json", R"([{"question_id": 1, "db_id": "school", "question": "q"},
                                        {"question_id": 2, "db_id": "atlantis", "question": "q"}])");
    auto load = ingest_dataset(t.dir / "mixed.json", t.corpus.schemas);
    EXPECT_EQ(load.questions.size(), 1u);
    ASSERT_EQ(load.diagnostics.size(), 1u);
    EXPECT_NE(load.diagnostics[0].find("atlantis"), std::string::npos);
}

TEST(Dataset, Errors) {
    Toy t;
    write_text(t.dir / "nodb.json", R"([{"question_id": 2, "db_id": "atlantis", "question": "q"}])");
    EXPECT_ERROR_CODE(ingest_dataset(t.dir / "nodb.json", t.corpus.schemas), ErrorCode::NoSchemasFound);
    EXPECT_ERROR_CODE(ingest_dataset(t.corpus.dataset, t.dir / "nowhere"), ErrorCode::NoSchemasFound);
    write_text(t.dir / "noq.json", R"([{"question_id": 2, "db_id": "school"}])");
    EXPECT_ERROR_CODE(ingest_dataset(t.dir / "noq.json", t.corpus.schemas), ErrorCode::ParseError);
    write_text(t.dir / "nosql.json", R"([{"question_id": 7, "db_id": "school", "question": "q"}])");
    try {
        ingest_dataset(t.dir / "nosql.json", t.corpus.schemas, true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("question_id 7"), std::string::npos);
    }
    EXPECT_ERROR_CODE(ingest_dataset(t.dir / "absent.json", t.corpus.schemas), ErrorCode::FileNotFound);
}

TEST(Catalog, FallsBackToSchemaDocument) {
    Toy t;
    const auto& school = t.catalog.get("school");
    write_schema_document(school.schema, t.corpus.schemas / "docs" / "schema.json");
    SchemaCatalog catalog(t.corpus.schemas);
    EXPECT_TRUE(catalog.contains("docs"));
    const auto& docs = catalog.get("docs");
    EXPECT_EQ(docs.schema.tables, school.schema.tables);
    EXPECT_FALSE(docs.database.has_value());
    EXPECT_ERROR_CODE(catalog.get("atlantis"), ErrorCode::FileNotFound);
}

TEST(RunLinking, WritesOneRowPerQuestionInOrder) {
    Toy t;
    auto summary = run_linking(t.questions(), t.catalog, t.config(), &t.client, t.dir / "link.jsonl");
    EXPECT_EQ(summary.processed, 10u);
    EXPECT_EQ(summary.failed, 0u);
    auto rows = lines_of(t.dir / "link.jsonl");
    ASSERT_EQ(rows.size(), 10u);
    for (std::size_t i = 0; i < rows.size(); ++i)
        EXPECT_EQ(rows[i]["question_id"], std::to_string(i + 1));
    const auto& q5 = rows[4];
    EXPECT_EQ(q5["status"], "ok");
    EXPECT_EQ(q5["mode"], "mode7");
    EXPECT_EQ(q5["sources"], json({"courses"}));
    EXPECT_EQ(q5["chosen_tables"], json({"courses", "enrollments", "schools", "students"}));
    EXPECT_EQ(q5["candidates"].size(), 2u);
    EXPECT_EQ(q5["union_connected"], true);
    EXPECT_EQ(q5["path_select_calls"], 0);
    EXPECT_EQ(q5["induced_fk_edges"][0]["provenance"], "DECLARED_FK");
    EXPECT_TRUE(q5["chosen_path_id"].is_null());
    EXPECT_NE(q5["linked_schema"].get<std::string>().find("CREATE TABLE schools"), std::string::npos);
    EXPECT_FALSE(q5.contains("tokens"));
}

TEST(RunLinking, ResumesAfterInterruption) {
    Toy t;
    const auto out = t.dir / "link.jsonl";
    auto qs = t.questions();
    std::vector<Question> first(qs.begin(), qs.begin() + 4);
    run_linking(first, t.catalog, t.config("mode4"), &t.client, out);
    // Simulate a crash halfway through writing the next row.
    std::ofstream(out, std::ios::app) << R"({"question_id": "5", "db_id": "sch)";

    auto summary = run_linking(qs, t.catalog, t.config("mode4"), &t.client, out);
    EXPECT_EQ(summary.skipped, 4u);
    EXPECT_EQ(summary.processed, 6u);
    auto rows = read_run_rows(out);
    EXPECT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows.at("5")["status"], "ok");
}

TEST(RunLinking, ReplayMissBecomesErrorRow) {
    Toy t;
    ReplayCache empty;
    CompletionClient replay(empty, CacheMode::Replay);
    auto summary = run_linking(t.questions(), t.catalog, t.config(), &replay, t.dir / "link.jsonl");
    EXPECT_EQ(summary.failed, 10u);
    auto rows = lines_of(t.dir / "link.jsonl");
    EXPECT_EQ(rows[0]["status"], "error");
    EXPECT_EQ(rows[0]["error_code"], "CACHE_MISS");
}

TEST(RunLinking, BaselineChoosesWholeSchemaWithoutCalls) {
    Toy t;
    auto summary = run_linking(t.questions(), t.catalog, t.config("baseline"), nullptr, t.dir / "link.jsonl");
    EXPECT_EQ(summary.failed, 0u);
    auto rows = lines_of(t.dir / "link.jsonl");
    EXPECT_EQ(rows[0]["chosen_tables"].size(), 6u);
    EXPECT_TRUE(rows[0]["join_path"].is_null());
    EXPECT_EQ(t.cache.size(), 0u);
}

TEST(RunLinking, UnknownModeIsConfigError) {
    Toy t;
    EXPECT_ERROR_CODE(run_linking(t.questions(), t.catalog, t.config("mode9"), &t.client, t.dir / "x.jsonl"),
                      ErrorCode::ConfigError);
}

TEST(RunGeneration, AddsPredictedSql) {
    Toy t;
    auto cfg = t.config();
    run_linking(t.questions(), t.catalog, cfg, &t.client, t.dir / "link.jsonl");
    auto summary = run_generation(t.dir / "link.jsonl", cfg, t.client, t.dir / "gen.jsonl");
    EXPECT_EQ(summary.failed, 0u);
    auto rows = lines_of(t.dir / "gen.jsonl");
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[6]["predicted_sql"], toy_questions()[6].gold_sql);
    EXPECT_EQ(rows[6]["generation_prompt"], "linked");
    EXPECT_EQ(rows[6]["generator_model"], "generator");

    const auto records = t.cache.records();
    const auto linked = std::find_if(records.begin(), records.end(), [](const CacheRecord& r) {
        return r.model == "generator" && r.user == "Question: " + toy_questions()[4].text + "\n";
    });
    ASSERT_NE(linked, records.end());
    EXPECT_NE(linked->system.find("- Join Path: courses, enrollments, schools, students\n"), std::string::npos);
    EXPECT_DOUBLE_EQ(linked->temperature, 0.3);
}

TEST(RunGeneration, BaselineOverLinkedRowsNeedsCatalog) {
    Toy t;
    auto cfg = t.config();
    run_linking(t.questions(), t.catalog, cfg, &t.client, t.dir / "link.jsonl");
    auto without = run_generation(t.dir / "link.jsonl", cfg, t.client, t.dir / "a.jsonl", true);
    EXPECT_EQ(without.failed, 10u);
    auto with = run_generation(t.dir / "link.jsonl", cfg, t.client, t.dir / "b.jsonl", true, &t.catalog);
    EXPECT_EQ(with.failed, 0u);
    EXPECT_EQ(lines_of(t.dir / "b.jsonl")[0]["generation_prompt"], "baseline");
}

TEST(RunGeneration, UnparsableReplyIsGenerationFailed) {
    Toy t;
    auto cfg = t.config();
    run_linking(t.questions(), t.catalog, cfg, &t.client, t.dir / "link.jsonl");
    ReplayCache cache;
    CallbackBackend shrug([](const CompletionRequest&) { return std::string("I cannot answer that."); });
    CompletionClient client(cache, CacheMode::Record, &shrug);
    auto summary = run_generation(t.dir / "link.jsonl", cfg, client, t.dir / "gen.jsonl");
    EXPECT_EQ(summary.failed, 10u);
    EXPECT_EQ(lines_of(t.dir / "gen.jsonl")[0]["generation_status"], "GENERATION_FAILED");
}

TEST(RunEvaluation, ScoresLinkingAndExecution) {
    Toy t;
    auto cfg = t.config();
    run_linking(t.questions(), t.catalog, cfg, &t.client, t.dir / "link.jsonl");
    run_generation(t.dir / "link.jsonl", cfg, t.client, t.dir / "gen.jsonl");
    auto report = run_evaluation(t.dir / "gen.jsonl", t.questions(), t.catalog, {}, t.dir / "report");
    EXPECT_EQ(report.evaluated, 10u);
    EXPECT_EQ(report.exec_evaluated, 10u);
    EXPECT_EQ(report.exec_matched, 10u);
    EXPECT_DOUBLE_EQ(report.summary.overall.recall, 1.0);
    EXPECT_DOUBLE_EQ(report.summary.overall.exact_match_rate, 0.8);
    EXPECT_EQ(report.summary_json["execution"]["accuracy"], 1.0);
    EXPECT_TRUE(std::filesystem::exists(t.dir / "report" / "summary.json"));
    const auto csv = read_text(t.dir / "report" / "per_question.csv");
    EXPECT_TRUE(csv.starts_with("question_id,db_id,difficulty,gold_tables,predicted_tables,precision,recall,f1,f6,"
                                "exact_match,exec_match\n1,school,simple,districts;schools,districts;schools,"
                                "1.000000,1.000000,1.000000,1.000000,true,true\n"))
        << csv;
}

TEST(RunEvaluation, MissingRowsAreCounted) {
    Toy t;
    auto qs = t.questions();
    std::vector<Question> some(qs.begin(), qs.begin() + 3);
    run_linking(some, t.catalog, t.config(), &t.client, t.dir / "link.jsonl");
    auto report = run_evaluation(t.dir / "link.jsonl", qs, t.catalog, {false, {}}, t.dir / "report");
    EXPECT_EQ(report.missing_rows, 7u);
    EXPECT_EQ(report.evaluated, 3u);
    EXPECT_FALSE(report.summary_json.contains("execution"));
}

TEST(RunSweep, ComparisonGrid) {
    Toy t;
    auto result = run_sweep(t.questions(), t.catalog, t.config(), t.client, LinkerConfig::all_modes(), t.dir / "sweep");
    ASSERT_EQ(result.modes.size(), 7u);
    const auto grid = read_text(t.dir / "sweep" / "comparison.csv");
    EXPECT_EQ(grid, result.grid_csv);
    EXPECT_TRUE(grid.starts_with("method,mode,emr,precision,recall,f1,f6\n1-1,mode1,"));
    EXPECT_NE(grid.find("\nforce-union,mode7,80.00,"), std::string::npos) << grid;
    for (int m = 1; m <= 7; ++m)
        EXPECT_TRUE(std::filesystem::exists(t.dir / "sweep" / ("mode" + std::to_string(m)) / "summary.json"));
}

TEST(RunLinking, WorkerCountDoesNotChangeOutput) {
    Toy t;
    auto cfg = t.config("mode4");
    cfg.workers = 1;
    run_linking(t.questions(), t.catalog, cfg, &t.client, t.dir / "one.jsonl");
    cfg.workers = 8;
    run_linking(t.questions(), t.catalog, cfg, &t.client, t.dir / "eight.jsonl");
    EXPECT_EQ(read_text(t.dir / "one.jsonl"), read_text(t.dir / "eight.jsonl"));
}
