#pragma once

#include "schemalink/pathfinder.hpp"
#include "schemalink/schema.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace schemalink {

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

enum class PromptId { SrcDst, PathSelect, SqlGenLinked, SqlGenBaseline };

struct PromptTemplate {
    PromptId id;
    std::string_view system_text;

    /// Placeholders are `{name}`; throws CONFIG_ERROR when one is left unbound.
    std::string render(const std::map<std::string, std::string>& bindings) const;
};

const PromptTemplate& prompt_template(PromptId id);

constexpr double kLinkingTemperature = 0.2;
constexpr double kGenerationTemperature = 0.3;

struct CompletionRequest {
    std::string model_name;
    std::string system_text;
    std::string user_text;
    double temperature = kLinkingTemperature;

    /// SHA-256 over (model, temperature, system, user) after newline normalization.
    std::string digest() const;

    bool operator==(const CompletionRequest&) const = default;
};

CompletionRequest render_src_dst_prompt(std::string_view question, const Schema& schema,
                                        const std::optional<std::string>& evidence, std::string model_name,
                                        double temperature = kLinkingTemperature);

/// Prompt 2. The schema shown is the sub-schema spanned by the union of the candidates.
CompletionRequest render_path_select_prompt(std::string_view question, const Schema& schema,
                                            const SchemaGraph& graph, const CandidateSet& candidates,
                                            std::span<const PathChoice> choices,
                                            const std::optional<std::string>& evidence, std::string model_name,
                                            double temperature = kLinkingTemperature);

/// `path_id=<n>: T1 -> T2 (join: T1.c = T2.d)` or `path_id=<n>: UNION {T1, T2}`.
std::string render_path_choice(const SchemaGraph& graph, const PathChoice& choice);

CompletionRequest render_sql_prompt(std::string_view question, const std::string& schema_text,
                                    const std::optional<std::string>& join_path,
                                    const std::optional<std::string>& evidence, std::string model_name,
                                    double temperature = kGenerationTemperature);

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

struct EndpointExtraction {
    std::vector<std::string> sources;
    std::vector<std::string> destinations;
    std::string raw_reply;
    std::vector<std::string> warnings;
};

/// Finds the last `src=...` (and the `dst=...` on the same or following line).
/// Names resolve case-insensitively to schema tables; unknown names are dropped with a warning.
/// Throws NO_PARSE or EMPTY_AFTER_FILTERING.
EndpointExtraction parse_src_dst_reply(std::string_view reply, const Schema& schema);

/// Inverse of parse_src_dst_reply for well-formed endpoints.
std::string format_src_dst(const std::vector<std::string>& sources, const std::vector<std::string>& destinations);

/// Integer after the last `path_id:` marker, in [1, max_id]. Throws NO_PARSE or OUT_OF_RANGE.
std::size_t parse_path_select_reply(std::string_view reply, std::size_t max_id);

/// First fenced code block, else the longest statement starting with SELECT/WITH.
std::optional<std::string> extract_sql(std::string_view reply);

// ---------------------------------------------------------------------------
// Completion backends
// ---------------------------------------------------------------------------

struct CompletionReply {
    std::string text;
    std::optional<long> prompt_tokens;
    std::optional<long> completion_tokens;
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual CompletionReply complete(const CompletionRequest& request) = 0;
};

struct HttpBackendOptions {
    std::string url; // full chat-completions URL or a base URL ending in /v1
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};

    /// Reads SCHEMA_LINKER_API_URL / SCHEMA_LINKER_API_KEY.
    static HttpBackendOptions from_environment();
};

/// OpenAI-compatible chat completions over HTTP(S).
class HttpCompletionBackend : public CompletionBackend {
public:
    explicit HttpCompletionBackend(HttpBackendOptions options);
    CompletionReply complete(const CompletionRequest& request) override;

    static nlohmann::json request_body(const CompletionRequest& request);
    static CompletionReply parse_response(std::string_view body);

private:
    HttpBackendOptions options_;
    std::string scheme_host_;
    std::string path_;
};

/// Answers from a callback; used for scripted transcripts.
class CallbackBackend : public CompletionBackend {
public:
    using Fn = std::function<std::string(const CompletionRequest&)>;
    explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}
    CompletionReply complete(const CompletionRequest& request) override { return {fn_(request), {}, {}}; }

private:
    Fn fn_;
};

struct CacheRecord {
    std::string digest;
    std::string model;
    double temperature = 0;
    std::string system;
    std::string user;
    std::string reply;
    std::string timestamp;
    std::optional<long> prompt_tokens;
    std::optional<long> completion_tokens;
};

/// JSON-lines transcript store keyed by request digest. Reads are concurrent,
/// appends are serialized and flushed immediately.
class ReplayCache {
public:
    ReplayCache() = default; // in-memory only
    explicit ReplayCache(std::filesystem::path path);

    std::optional<std::string> lookup(const std::string& digest) const;
    /// Reply text plus whatever usage the backend reported when it was recorded.
    std::optional<CompletionReply> lookup_reply(const std::string& digest) const;
    /// Returns false (and writes nothing) if the digest is already present.
    bool append(const CompletionRequest& request, const std::string& reply);
    bool append(const CompletionRequest& request, const CompletionReply& reply);
    std::size_t size() const;
    std::vector<CacheRecord> records() const;

private:
    std::optional<std::filesystem::path> path_;
    mutable std::shared_mutex mutex_;
    std::vector<CacheRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CacheMode {
    Replay, // cache only; a miss is fatal
    Record, // serve hits from cache, forward misses to the backend and store them
};

struct CompletionStats {
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
    std::size_t backend_calls = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

class CompletionClient {
public:
    CompletionClient(ReplayCache& cache, CacheMode mode, CompletionBackend* backend = nullptr,
                     std::size_t max_in_flight = 4);

    CompletionReply complete(const CompletionRequest& request);
    CompletionStats stats() const;

private:
    ReplayCache& cache_;
    CacheMode mode_;
    CompletionBackend* backend_;
    std::counting_semaphore<1024> in_flight_;
    mutable std::mutex stats_mutex_;
    CompletionStats stats_;
};

std::string complete(const CompletionRequest& request, CompletionClient& client);

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool reported = false; // some backend reply carried usage numbers
};

/// While alive, backend replies completed on this thread add their usage to `usage`.
class UsageScope {
public:
    explicit UsageScope(TokenUsage& usage);
    ~UsageScope();
    UsageScope(const UsageScope&) = delete;
    UsageScope& operator=(const UsageScope&) = delete;

    static void record(const CompletionReply& reply);

private:
    TokenUsage* previous_;
};

// ---------------------------------------------------------------------------
// Oracles for link()
// ---------------------------------------------------------------------------

struct LlmLinkerOptions {
    std::string model_name;
    double temperature = kLinkingTemperature;
    /// Extra attempts (with a format reminder) when the src/dst reply cannot be parsed.
    int parse_retries = 1;
};

/// Prompt 1 through `client`, with retry-then-fallback to the full schema (DEGRADED).
EndpointOracle make_endpoint_oracle(CompletionClient& client, const Schema& schema, LlmLinkerOptions options);

/// Prompt 2 through `client`.
PathOracle make_path_oracle(CompletionClient& client, const Schema& schema, const SchemaGraph& graph,
                            LlmLinkerOptions options);

} // namespace schemalink
