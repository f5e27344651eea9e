// schemalink: schema linking over foreign-key graphs, with an evaluation harness.
//
//   schemalink link     --dataset dev.json --schemas dev_databases --out link.jsonl --cache cache.jsonl
//   schemalink generate --in link.jsonl --out gen.jsonl --model <id> --cache cache.jsonl
//   schemalink evaluate --in gen.jsonl --dataset dev.json --schemas dev_databases --report-dir report
//   schemalink sweep    --modes all --dataset dev.json --schemas dev_databases --out-dir sweep
//
// Exit codes: 0 success, 1 fatal configuration/IO error, 2 completed with per-row failures.

#include "schemalink/error.hpp"
#include "schemalink/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace schemalink;

namespace {

constexpr const char* kDefaultLinkerModel = "google/gemini-2.5-flash-preview";

struct ClientSetup {
    std::unique_ptr<ReplayCache> cache;
    std::unique_ptr<CompletionBackend> backend;
    std::unique_ptr<CompletionClient> client;
};

ClientSetup make_client(const fs::path& cache_path, bool record, std::size_t in_flight) {
    ClientSetup s;
    s.cache = cache_path.empty() ? std::make_unique<ReplayCache>() : std::make_unique<ReplayCache>(cache_path);
    if (record)
        s.backend = std::make_unique<HttpCompletionBackend>(HttpBackendOptions::from_environment());
    s.client = std::make_unique<CompletionClient>(*s.cache, record ? CacheMode::Record : CacheMode::Replay,
                                                  s.backend.get(), in_flight);
    return s;
}

int report_run(const char* what, const RunSummary& summary) {
    std::cerr << what << ": " << summary.processed << " processed, " << summary.skipped << " already present, "
              << summary.failed << " failed\n";
    return summary.failed ? 2 : 0;
}

void print_diagnostics(const std::vector<std::string>& diagnostics) {
    for (const auto& d : diagnostics)
        std::cerr << "warning: " << d << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Schema linking via shortest paths over the foreign-key graph"};
    app.require_subcommand(1);

    // link
    auto* link_cmd = app.add_subcommand("link", "Link every dataset question to a sub-schema");
    fs::path dataset, schemas, out, cache;
    std::string mode = "mode7";
    std::string model = kDefaultLinkerModel;
    double temperature = kLinkingTemperature;
    bool record = false;
    std::size_t workers = 4;
    std::size_t in_flight = 4;
    std::string id_rule = "token";
    link_cmd->add_option("--dataset", dataset, "BIRD-style dataset JSON")->required()->check(CLI::ExistingFile);
    link_cmd->add_option("--schemas", schemas, "Schema root directory")->required()->check(CLI::ExistingDirectory);
    link_cmd->add_option("--mode", mode, "mode1..mode7 or baseline")->capture_default_str();
    link_cmd->add_option("--out", out, "Run output (JSON lines, resumable)")->required();
    link_cmd->add_option("--cache", cache, "Replay cache (JSON lines)");
    link_cmd->add_flag("--record,!--replay", record, "Record misses through the live backend (default: replay)");
    link_cmd->add_option("--model", model, "Linker model name")->capture_default_str();
    link_cmd->add_option("--temperature", temperature)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    link_cmd->add_option("--workers", workers)->capture_default_str();
    link_cmd->add_option("--max-in-flight", in_flight)->capture_default_str();
    link_cmd->add_option("--id-rule", id_rule, "Sparse-graph id matching: token or substring")
        ->capture_default_str()
        ->check(CLI::IsMember({"token", "substring"}));

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate SQL for linked questions");
    fs::path gen_in, gen_out, gen_cache, gen_schemas;
    std::string gen_model;
    double gen_temperature = kGenerationTemperature;
    bool gen_record = false;
    bool baseline = false;
    gen_cmd->add_option("--in", gen_in, "Link output")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen_out, "Generation output (JSON lines, resumable)")->required();
    gen_cmd->add_option("--model", gen_model, "Generator model name")->required();
    gen_cmd->add_flag("--baseline", baseline, "Use the full-schema prompt");
    gen_cmd->add_option("--cache", gen_cache, "Replay cache (JSON lines)");
    gen_cmd->add_flag("--record,!--replay", gen_record, "Record misses through the live backend (default: replay)");
    gen_cmd->add_option("--temperature", gen_temperature)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--schemas", gen_schemas, "Schema root; needed for --baseline over linked rows");
    gen_cmd->add_option("--workers", workers)->capture_default_str();
    gen_cmd->add_option("--max-in-flight", in_flight)->capture_default_str();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a run against gold SQL");
    fs::path eval_in, eval_dataset, eval_schemas, report_dir = "report";
    bool execute = true;
    int timeout_s = 30;
    eval_cmd->add_option("--in", eval_in, "Link or generation output")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--dataset", eval_dataset)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--schemas", eval_schemas)->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_flag("--exec,!--no-exec", execute, "Compare execution results (default: on)");
    eval_cmd->add_option("--report-dir", report_dir)->capture_default_str();
    eval_cmd->add_option("--timeout", timeout_s, "Per-statement timeout in seconds")->capture_default_str();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run several linker modes and compare them");
    std::string modes = "all";
    fs::path out_dir = "sweep";
    sweep_cmd->add_option("--modes", modes, "all or a comma-separated list (mode1,mode7,...)")->capture_default_str();
    sweep_cmd->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--schemas", schemas)->required()->check(CLI::ExistingDirectory);
    sweep_cmd->add_option("--out-dir", out_dir)->capture_default_str();
    sweep_cmd->add_option("--cache", cache);
    sweep_cmd->add_flag("--record,!--replay", record);
    sweep_cmd->add_option("--model", model)->capture_default_str();
    sweep_cmd->add_option("--temperature", temperature)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sweep_cmd->add_option("--workers", workers)->capture_default_str();
    sweep_cmd->add_option("--max-in-flight", in_flight)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (link_cmd->parsed()) {
            auto load = ingest_dataset(dataset, schemas);
            print_diagnostics(load.diagnostics);
            SchemaCatalog catalog(schemas, id_rule == "substring" ? IdColumnRule::Substring : IdColumnRule::TokenBoundary);
            RunConfig cfg;
            cfg.mode = mode;
            cfg.linker_model = model;
            cfg.linking_temperature = temperature;
            cfg.cache_path = cache;
            cfg.cache_mode = record ? CacheMode::Record : CacheMode::Replay;
            cfg.workers = workers;
            std::unique_ptr<ClientSetup> setup;
            if (to_lower(mode) != "baseline")
                setup = std::make_unique<ClientSetup>(make_client(cache, record, in_flight));
            auto summary = run_linking(load.questions, catalog, cfg, setup ? setup->client.get() : nullptr, out);
            return report_run("link", summary) | (load.diagnostics.empty() ? 0 : 2);
        }
        if (gen_cmd->parsed()) {
            auto setup = make_client(gen_cache, gen_record, in_flight);
            RunConfig cfg;
            cfg.generator_model = gen_model;
            cfg.generation_temperature = gen_temperature;
            cfg.cache_path = gen_cache;
            cfg.cache_mode = gen_record ? CacheMode::Record : CacheMode::Replay;
            cfg.stage = RunStage::LinkAndGenerate;
            cfg.workers = workers;
            std::unique_ptr<SchemaCatalog> catalog;
            if (!gen_schemas.empty())
                catalog = std::make_unique<SchemaCatalog>(gen_schemas);
            auto summary = run_generation(gen_in, cfg, *setup.client, gen_out, baseline, catalog.get());
            return report_run("generate", summary);
        }
        if (eval_cmd->parsed()) {
            auto load = ingest_dataset(eval_dataset, eval_schemas, true);
            print_diagnostics(load.diagnostics);
            SchemaCatalog catalog(eval_schemas);
            EvaluationOptions opts;
            opts.execute = execute;
            opts.execution.timeout = std::chrono::seconds(timeout_s);
            auto report = run_evaluation(eval_in, load.questions, catalog, opts, report_dir);
            std::cout << report.summary_json.dump(2) << "\n";
            const bool row_failures = report.extraction_failed || report.missing_rows || report.exec_gold_failed;
            return row_failures || !load.diagnostics.empty() ? 2 : 0;
        }
        if (sweep_cmd->parsed()) {
            std::vector<LinkerConfig> configs;
            if (to_lower(modes) == "all") {
                configs = LinkerConfig::all_modes();
            } else {
                std::string item;
                std::istringstream in(modes);
                while (std::getline(in, item, ','))
                    configs.push_back(LinkerConfig::parse(item));
            }
            auto load = ingest_dataset(dataset, schemas, true);
            print_diagnostics(load.diagnostics);
            SchemaCatalog catalog(schemas);
            auto setup = make_client(cache, record, in_flight);
            RunConfig cfg;
            cfg.linker_model = model;
            cfg.linking_temperature = temperature;
            cfg.cache_mode = record ? CacheMode::Record : CacheMode::Replay;
            cfg.workers = workers;
            auto result = run_sweep(load.questions, catalog, cfg, *setup.client, configs, out_dir);
            std::cout << result.grid_csv;
            return load.diagnostics.empty() ? 0 : 2;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
