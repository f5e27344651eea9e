#include "schemalink/error.hpp"
#include "schemalink/llm.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace schemalink {

using nlohmann::json;

namespace {

std::string normalize_newlines(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::ConfigError, "SHA-256 unavailable");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string CompletionRequest::digest() const {
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.6f", temperature);
    std::string canonical;
    for (const auto& field : {model_name, std::string(temp), normalize_newlines(system_text),
                              normalize_newlines(user_text)}) {
        canonical += std::to_string(field.size());
        canonical += ':';
        canonical += field;
    }
    return sha256_hex(canonical);
}

// ---------------------------------------------------------------------------
// Replay cache
// ---------------------------------------------------------------------------

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(*path_);
    if (!in)
        return; // new cache
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        try {
            const auto j = json::parse(line);
            CacheRecord r{j.at("digest").get<std::string>(), j.at("model").get<std::string>(),
                          j.at("temperature").get<double>(),  j.at("system").get<std::string>(),
                          j.at("user").get<std::string>(),    j.at("reply").get<std::string>(),
                          j.value("timestamp", std::string())};
            if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
                if (usage->contains("prompt_tokens"))
                    r.prompt_tokens = usage->at("prompt_tokens").get<long>();
                if (usage->contains("completion_tokens"))
                    r.completion_tokens = usage->at("completion_tokens").get<long>();
            }
            if (index_.emplace(r.digest, records_.size()).second)
                records_.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, path_->string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::optional<std::string> ReplayCache::lookup(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(digest);
    if (it == index_.end())
        return std::nullopt;
    return records_[it->second].reply;
}

std::optional<CompletionReply> ReplayCache::lookup_reply(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(digest);
    if (it == index_.end())
        return std::nullopt;
    const auto& r = records_[it->second];
    return CompletionReply{r.reply, r.prompt_tokens, r.completion_tokens};
}

bool ReplayCache::append(const CompletionRequest& request, const std::string& reply) {
    return append(request, CompletionReply{reply, {}, {}});
}

bool ReplayCache::append(const CompletionRequest& request, const CompletionReply& reply) {
    CacheRecord r{request.digest(), request.model_name, request.temperature, request.system_text,
                  request.user_text, reply.text, utc_timestamp(), reply.prompt_tokens, reply.completion_tokens};
    std::unique_lock lock(mutex_);
    if (index_.count(r.digest))
        return false;
    if (path_) {
        std::ofstream out(*path_, std::ios::app | std::ios::binary);
        if (!out)
            throw Error(ErrorCode::IoError, "cannot append to " + path_->string());
        json j{{"digest", r.digest},   {"model", r.model}, {"temperature", r.temperature}, {"system", r.system},
               {"user", r.user},       {"reply", r.reply}, {"timestamp", r.timestamp}};
        if (r.prompt_tokens || r.completion_tokens) {
            json usage = json::object();
            if (r.prompt_tokens)
                usage["prompt_tokens"] = *r.prompt_tokens;
            if (r.completion_tokens)
                usage["completion_tokens"] = *r.completion_tokens;
            j["usage"] = std::move(usage);
        }
        out << j.dump() << '\n';
        out.flush();
        if (!out)
            throw Error(ErrorCode::IoError, "write failed on " + path_->string());
    }
    index_.emplace(r.digest, records_.size());
    records_.push_back(std::move(r));
    return true;
}

std::size_t ReplayCache::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

std::vector<CacheRecord> ReplayCache::records() const {
    std::shared_lock lock(mutex_);
    return records_;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

CompletionClient::CompletionClient(ReplayCache& cache, CacheMode mode, CompletionBackend* backend,
                                   std::size_t max_in_flight)
    : cache_(cache), mode_(mode), backend_(backend),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(max_in_flight, 1, 1024))) {
    if (mode_ == CacheMode::Record && !backend_)
        throw Error(ErrorCode::ConfigError, "record mode needs a completion backend");
}

CompletionReply CompletionClient::complete(const CompletionRequest& request) {
    const auto digest = request.digest();
    {
        std::lock_guard lock(stats_mutex_);
        ++stats_.requests;
    }
    if (auto hit = cache_.lookup_reply(digest)) {
        UsageScope::record(*hit);
        std::lock_guard lock(stats_mutex_);
        ++stats_.cache_hits;
        return *hit;
    }
    if (mode_ == CacheMode::Replay)
        throw Error(ErrorCode::CacheMiss, "no transcript for request " + digest.substr(0, 16));

    in_flight_.acquire();
    CompletionReply reply;
    try {
        reply = backend_->complete(request);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();

    cache_.append(request, reply);
    UsageScope::record(reply);
    std::lock_guard lock(stats_mutex_);
    ++stats_.backend_calls;
    stats_.prompt_tokens += reply.prompt_tokens.value_or(0);
    stats_.completion_tokens += reply.completion_tokens.value_or(0);
    return reply;
}

CompletionStats CompletionClient::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

namespace {
thread_local TokenUsage* current_usage = nullptr;
}

UsageScope::UsageScope(TokenUsage& usage) : previous_(current_usage) { current_usage = &usage; }
UsageScope::~UsageScope() { current_usage = previous_; }

void UsageScope::record(const CompletionReply& reply) {
    if (!current_usage || (!reply.prompt_tokens && !reply.completion_tokens))
        return;
    current_usage->reported = true;
    current_usage->prompt_tokens += reply.prompt_tokens.value_or(0);
    current_usage->completion_tokens += reply.completion_tokens.value_or(0);
}

std::string complete(const CompletionRequest& request, CompletionClient& client) {
    return client.complete(request).text;
}

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

HttpBackendOptions HttpBackendOptions::from_environment() {
    HttpBackendOptions opts;
    if (const char* url = std::getenv("SCHEMA_LINKER_API_URL"))
        opts.url = url;
    if (const char* key = std::getenv("SCHEMA_LINKER_API_KEY"))
        opts.api_key = key;
    return opts;
}

HttpCompletionBackend::HttpCompletionBackend(HttpBackendOptions options) : options_(std::move(options)) {
    const auto& url = options_.url;
    const auto scheme_end = url.find("://");
    if (url.empty() || scheme_end == std::string::npos)
        throw Error(ErrorCode::ConfigError, "SCHEMA_LINKER_API_URL must be an http(s) URL, got '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_.empty() && path_.back() == '/')
        path_.pop_back();
    const std::string suffix = "/chat/completions";
    if (path_.size() < suffix.size() || path_.compare(path_.size() - suffix.size(), suffix.size(), suffix) != 0)
        path_ += suffix;
}

json HttpCompletionBackend::request_body(const CompletionRequest& request) {
    return {{"model", request.model_name},
            {"messages", json::array({{{"role", "system"}, {"content", request.system_text}},
                                      {{"role", "user"}, {"content", request.user_text}}})},
            {"temperature", request.temperature}};
}

CompletionReply HttpCompletionBackend::parse_response(std::string_view body) {
    try {
        const auto j = json::parse(body);
        CompletionReply reply;
        const auto& content = j.at("choices").at(0).at("message").at("content");
        reply.text = content.is_string() ? content.get<std::string>() : std::string();
        if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
            if (usage->contains("prompt_tokens"))
                reply.prompt_tokens = usage->at("prompt_tokens").get<long>();
            if (usage->contains("completion_tokens"))
                reply.completion_tokens = usage->at("completion_tokens").get<long>();
        }
        return reply;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BackendError, std::string("malformed completion response: ") + e.what());
    }
}

CompletionReply HttpCompletionBackend::complete(const CompletionRequest& request) {
    const auto body = request_body(request).dump();
    auto backoff = options_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        httplib::Client client(scheme_host_);
        client.set_connection_timeout(std::chrono::seconds(30));
        client.set_read_timeout(options_.timeout);
        client.set_write_timeout(options_.timeout);
        httplib::Headers headers;
        if (!options_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + options_.api_key);

        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
        } else if (res->status >= 200 && res->status < 300) {
            return parse_response(res->body);
        } else {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            if (res->status != 429 && res->status < 500)
                break; // not retryable
        }
        if (attempt < options_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error(ErrorCode::BackendError, last_error);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

EndpointOracle make_endpoint_oracle(CompletionClient& client, const Schema& schema, LlmLinkerOptions options) {
    return [&client, &schema, options](const LinkQuery& query) {
        auto request = render_src_dst_prompt(query.question, schema, query.evidence, options.model_name,
                                             options.temperature);
        Endpoints out;
        out.calls = 0;
        for (int attempt = 0; attempt <= options.parse_retries; ++attempt) {
            ++out.calls;
            const auto reply = client.complete(request).text;
            try {
                auto parsed = parse_src_dst_reply(reply, schema);
                out.sources = std::move(parsed.sources);
                out.destinations = std::move(parsed.destinations);
                out.warnings.insert(out.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
                return out;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoParse && e.code() != ErrorCode::EmptyAfterFiltering)
                    throw;
                out.warnings.push_back(std::string("endpoint extraction attempt ") + std::to_string(attempt + 1) +
                                       ": " + e.what());
            }
            request.user_text += "\nReminder: answer with exactly one line of the form "
                                 "src=TableA,TableB, dst=TableC,TableD using table names from the schema.\n";
        }
        out.degraded = true;
        for (const auto& t : schema.tables) {
            out.sources.push_back(t.name);
            out.destinations.push_back(t.name);
        }
        out.warnings.push_back("DEGRADED: endpoints default to every table");
        return out;
    };
}

PathOracle make_path_oracle(CompletionClient& client, const Schema& schema, const SchemaGraph& graph,
                            LlmLinkerOptions options) {
    return [&client, &schema, &graph, options](const LinkQuery& query, const CandidateSet& candidates,
                                               std::span<const PathChoice> choices) {
        const auto request = render_path_select_prompt(query.question, schema, graph, candidates, choices,
                                                       query.evidence, options.model_name, options.temperature);
        return parse_path_select_reply(client.complete(request).text, choices.size());
    };
}

} // namespace schemalink
