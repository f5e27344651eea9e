#include "schemalink/error.hpp"
#include "schemalink/llm.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace schemalink {

namespace {

constexpr std::string_view kSrcDstSystem = R"(ROLE & OBJECTIVE
You are a senior data engineer who analyses SQL schemas and maps user questions precisely to source tables (filtering) and destination tables (final result columns).

TASK
Identify:
- Source table(s) (src): contain columns used in filters/conditions.
- Destination table(s) (dst): contain columns returned in the answer.

INSTRUCTIONS
1. Internally inspect every table to determine
   - which tables participate in filtering, and
   - which tables supply the requested output columns.
   Briefly justify your choice internally but do not include that justification in the final answer.
2. Output exactly one line in the following format:
   src=TableA,TableB, dst=TableC,TableD)";

constexpr std::string_view kPathSelectSystem = R"(ROLE & OBJECTIVE
You are a database expert tasked with selecting the optimal join path to answer user questions using a provided SQL schema.

TASK
Choose the single most appropriate join path from a list of candidates that correctly connects the relevant tables.

INSTRUCTIONS
1. Internally inspect each path to determine:
   - whether it connects all necessary tables,
   - whether joins are complete and valid,
   - and whether it satisfies the intent of the question.
   Briefly justify your decision internally but do not include any reasoning in the final output.
2. Output one line in the following format:
   Final Answer: path_id: <ID>)";

constexpr std::string_view kSqlGenLinkedSystem = R"(ROLE & OBJECTIVE
You are an expert in SQLite query generation. Your task is to generate a valid query to answer a user question based on the given schema and join path.

INPUTS
- Schema: {schema}
- Join Path: {join_path_string}
- Question Context: {evidence_string}

INSTRUCTIONS
1. Use the provided schema and join path to construct a valid SQLite query.
2. Ensure the query correctly answers the user's question.
3. Format the query clearly and confirm it adheres to SQLite syntax.)";

constexpr std::string_view kSqlGenBaselineSystem = R"(ROLE & OBJECTIVE
You are an expert in SQLite query generation. Your task is to produce a valid query that answers a user's question using the provided schema.

INPUTS
- Schema: {schema}
- Question Context: {evidence_string}

INSTRUCTIONS
1. Generate a correct SQLite query that answers the user question.
2. Ensure the query is syntactically valid and aligns with the schema.
3. Format the query clearly and cleanly.)";

const PromptTemplate kTemplates[] = {
    {PromptId::SrcDst, kSrcDstSystem},
    {PromptId::PathSelect, kPathSelectSystem},
    {PromptId::SqlGenLinked, kSqlGenLinkedSystem},
    {PromptId::SqlGenBaseline, kSqlGenBaselineSystem},
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string question_block(std::string_view question, const std::optional<std::string>& evidence) {
    std::string out = "Question: " + std::string(question) + "\n";
    if (evidence && !trim(*evidence).empty())
        out += "Evidence: " + *evidence + "\n";
    return out;
}

} // namespace

const PromptTemplate& prompt_template(PromptId id) {
    for (const auto& t : kTemplates) {
        if (t.id == id)
            return t;
    }
    throw Error(ErrorCode::ConfigError, "unknown prompt id");
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
    std::string out;
    std::size_t pos = 0;
    while (pos < system_text.size()) {
        const auto open = system_text.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(system_text.substr(pos));
            break;
        }
        const auto close = system_text.find('}', open);
        const auto name = system_text.substr(open + 1, close == std::string_view::npos ? 0 : close - open - 1);
        const bool placeholder = close != std::string_view::npos && !name.empty() &&
                                 std::all_of(name.begin(), name.end(), is_word_char);
        if (!placeholder) {
            out.append(system_text.substr(pos, open - pos + 1));
            pos = open + 1;
            continue;
        }
        auto it = bindings.find(std::string(name));
        if (it == bindings.end())
            throw Error(ErrorCode::ConfigError, "unbound prompt placeholder {" + std::string(name) + "}");
        out.append(system_text.substr(pos, open - pos));
        out.append(it->second);
        pos = close + 1;
    }
    return out;
}

CompletionRequest render_src_dst_prompt(std::string_view question, const Schema& schema,
                                        const std::optional<std::string>& evidence, std::string model_name,
                                        double temperature) {
    CompletionRequest req;
    req.model_name = std::move(model_name);
    req.temperature = temperature;
    req.system_text = prompt_template(PromptId::SrcDst).render({});
    req.user_text = "Schema:\n" + render_schema_text(schema) + "\n" + question_block(question, evidence);
    return req;
}

std::string render_path_choice(const SchemaGraph& graph, const PathChoice& choice) {
    std::string out = "path_id=" + std::to_string(choice.path_id) + ": ";
    if (choice.is_union())
        return out + "UNION {" + join(choice.tables, ", ") + "}";
    const auto& tables = choice.path->tables;
    out += join(tables, " -> ");
    std::vector<std::string> joins;
    for (std::size_t i = 0; i + 1 < tables.size(); ++i) {
        if (const auto* edge = graph.edge_between(graph.require(tables[i]), graph.require(tables[i + 1]))) {
            for (const auto& j : edge->justifications)
                joins.push_back(j.join_condition());
        }
    }
    if (!joins.empty())
        out += " (join: " + join(joins, ", ") + ")";
    return out;
}

CompletionRequest render_path_select_prompt(std::string_view question, const Schema& schema,
                                            const SchemaGraph& graph, const CandidateSet& candidates,
                                            std::span<const PathChoice> choices,
                                            const std::optional<std::string>& evidence, std::string model_name,
                                            double temperature) {
    CompletionRequest req;
    req.model_name = std::move(model_name);
    req.temperature = temperature;
    req.system_text = prompt_template(PromptId::PathSelect).render({});
    req.user_text = "Schema:\n" +
                    render_schema_text(schema, candidates.union_tables,
                                       induced_foreign_keys(schema, candidates.union_tables)) +
                    "\n" + question_block(question, evidence) + "Candidate join paths:\n";
    for (const auto& choice : choices)
        req.user_text += render_path_choice(graph, choice) + "\n";
    return req;
}

CompletionRequest render_sql_prompt(std::string_view question, const std::string& schema_text,
                                    const std::optional<std::string>& join_path,
                                    const std::optional<std::string>& evidence, std::string model_name,
                                    double temperature) {
    CompletionRequest req;
    req.model_name = std::move(model_name);
    req.temperature = temperature;
    std::map<std::string, std::string> bindings{
        {"schema", "\n" + schema_text},
        {"evidence_string", evidence && !trim(*evidence).empty() ? *evidence : "None"},
    };
    if (join_path) {
        bindings["join_path_string"] = *join_path;
        req.system_text = prompt_template(PromptId::SqlGenLinked).render(bindings);
    } else {
        req.system_text = prompt_template(PromptId::SqlGenBaseline).render(bindings);
    }
    req.user_text = "Question: " + std::string(question) + "\n";
    return req;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

// Position just past `key=` (case-insensitive, word-bounded, spaces allowed around '='), or npos.
std::size_t find_marker(std::string_view line, std::string_view key, std::size_t from = 0,
                        std::size_t* marker_start = nullptr) {
    const auto lowered = to_lower(line);
    for (auto pos = lowered.find(key, from); pos != std::string::npos; pos = lowered.find(key, pos + 1)) {
        if (pos > 0 && is_word_char(lowered[pos - 1]))
            continue;
        auto p = pos + key.size();
        while (p < lowered.size() && (lowered[p] == ' ' || lowered[p] == '\t' || lowered[p] == '*'))
            ++p;
        if (p < lowered.size() && lowered[p] == '=') {
            if (marker_start)
                *marker_start = pos;
            return p + 1;
        }
    }
    return std::string::npos;
}

std::vector<std::string> split_names(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        std::string name = trim(item);
        auto strip = [](char c) {
            return c == '"' || c == '\'' || c == '`' || c == '[' || c == ']' || c == '*' || c == '(' || c == ')' ||
                   c == '.' || c == ';' || c == ':' || c == '{' || c == '}';
        };
        while (!name.empty() && strip(name.front()))
            name.erase(name.begin());
        while (!name.empty() && strip(name.back()))
            name.pop_back();
        name = trim(name);
        if (!name.empty())
            out.push_back(std::move(name));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.emplace_back(line);
        if (nl == std::string_view::npos)
            break;
        start = nl + 1;
    }
    return lines;
}

std::vector<std::string> resolve(const std::vector<std::string>& names, const Schema& schema,
                                 std::vector<std::string>& warnings) {
    std::vector<std::string> out;
    for (const auto& n : names) {
        auto canonical = schema.canonical_table(n);
        if (!canonical) {
            warnings.push_back("dropped unknown table '" + n + "'");
            continue;
        }
        if (std::find(out.begin(), out.end(), *canonical) == out.end())
            out.push_back(*canonical);
    }
    return out;
}

} // namespace

EndpointExtraction parse_src_dst_reply(std::string_view reply, const Schema& schema) {
    const auto lines = split_lines(reply);
    for (std::size_t i = lines.size(); i-- > 0;) {
        const auto& line = lines[i];
        const auto src_at = find_marker(line, "src");
        if (src_at == std::string::npos)
            continue;

        std::string src_text;
        std::string dst_text;
        std::size_t dst_start = 0;
        if (auto dst_at = find_marker(line, "dst", src_at, &dst_start); dst_at != std::string::npos) {
            src_text = line.substr(src_at, dst_start - src_at);
            dst_text = line.substr(dst_at);
        } else {
            src_text = line.substr(src_at);
            bool found = false;
            for (std::size_t j : {i + 1, i - 1}) {
                if (j >= lines.size())
                    continue;
                if (auto at = find_marker(lines[j], "dst"); at != std::string::npos) {
                    dst_text = lines[j].substr(at);
                    found = true;
                    break;
                }
            }
            if (!found)
                continue;
        }

        EndpointExtraction out;
        out.raw_reply = std::string(reply);
        out.sources = resolve(split_names(src_text), schema, out.warnings);
        out.destinations = resolve(split_names(dst_text), schema, out.warnings);
        if (out.sources.empty() || out.destinations.empty()) {
            throw Error(ErrorCode::EmptyAfterFiltering,
                        std::string(out.sources.empty() ? "src" : "dst") + " list has no known table");
        }
        return out;
    }
    throw Error(ErrorCode::NoParse, "no src=/dst= line in reply");
}

std::string format_src_dst(const std::vector<std::string>& sources, const std::vector<std::string>& destinations) {
    return "src=" + join(sources, ",") + ", dst=" + join(destinations, ",");
}

std::size_t parse_path_select_reply(std::string_view reply, std::size_t max_id) {
    static const std::regex marker(R"(path\\?_id\s*[:=]\s*\**\s*(\d+))", std::regex::icase);
    const std::string text(reply);
    std::smatch last;
    bool found = false;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), marker); it != std::sregex_iterator(); ++it) {
        last = *it;
        found = true;
    }
    if (!found)
        throw Error(ErrorCode::NoParse, "no path_id marker in reply");
    const auto digits = last[1].str();
    std::size_t id = 0;
    try {
        id = std::stoull(digits);
    } catch (const std::exception&) {
        throw Error(ErrorCode::OutOfRange, "path_id " + digits);
    }
    if (id < 1 || id > max_id)
        throw Error(ErrorCode::OutOfRange, "path_id " + digits + " not in 1.." + std::to_string(max_id));
    return id;
}

std::optional<std::string> extract_sql(std::string_view reply) {
    if (auto open = reply.find("```"); open != std::string_view::npos) {
        auto body_start = reply.find('\n', open);
        if (body_start != std::string_view::npos) {
            auto close = reply.find("```", body_start);
            auto body = trim(reply.substr(body_start + 1, close == std::string_view::npos ? std::string_view::npos
                                                                                          : close - body_start - 1));
            while (!body.empty() && body.back() == ';')
                body = trim(std::string_view(body).substr(0, body.size() - 1));
            if (!body.empty())
                return body;
        }
    }

    const auto lowered = to_lower(reply);
    std::string best;
    for (std::string_view kw : {"select", "with"}) {
        for (auto pos = lowered.find(kw); pos != std::string::npos; pos = lowered.find(kw, pos + 1)) {
            if (pos > 0 && is_word_char(lowered[pos - 1]))
                continue;
            const auto after = pos + kw.size();
            if (after < lowered.size() && is_word_char(lowered[after]))
                continue;
            if (kw == "with") {
                // Prose uses "with" freely; a CTE only counts at the start of a line.
                auto line_start = lowered.find_last_of('\n', pos);
                line_start = line_start == std::string::npos ? 0 : line_start + 1;
                if (!trim(std::string_view(lowered).substr(line_start, pos - line_start)).empty())
                    continue;
            }
            const auto end = reply.find(';', pos);
            auto stmt = trim(reply.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
            if (stmt.size() > best.size())
                best = std::move(stmt);
        }
    }
    if (best.empty())
        return std::nullopt;
    return best;
}

} // namespace schemalink
