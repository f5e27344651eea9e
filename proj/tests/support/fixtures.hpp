#pragma once

#include "schemalink/llm.hpp"
#include "schemalink/schema.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace schemalink::testing {

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Runs `statements` against a fresh SQLite file.
void make_sqlite(const std::filesystem::path& file, const std::string& statements);

// ---------------------------------------------------------------------------
// Six-table school database and its ten scripted questions
// ---------------------------------------------------------------------------

struct ToyQuestion {
    std::string id;
    std::string text;
    std::vector<std::string> sources;
    std::vector<std::string> destinations;
    std::string gold_sql;
    std::vector<std::string> gold_tables;
    std::string difficulty;
};

extern const char* const kSchoolDdl;

const std::vector<ToyQuestion>& toy_questions();

struct ToyCorpus {
    std::filesystem::path schemas; // <schemas>/school/school.sqlite
    std::filesystem::path dataset;
};

ToyCorpus write_toy_corpus(const std::filesystem::path& dir, std::size_t limit = 10);

// src/dst from the question script, "Final Answer: path_id: 1" for path selection,
// the gold SQL in a fenced block for generation.
std::string scripted_reply(const CompletionRequest& request);

// ---------------------------------------------------------------------------
// Graph oracles
// ---------------------------------------------------------------------------

struct SmallGraph {
    std::size_t nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

SmallGraph random_graph(std::size_t nodes, double p, std::uint64_t seed);

// Table i is named "t<i>"; one FK per edge.
Schema schema_for(const SmallGraph& g);

// DFS over every simple path, then keep those of minimal length. Sorted.
std::vector<std::vector<std::size_t>> brute_force_shortest_paths(const SmallGraph& g, std::size_t src,
                                                                 std::size_t dst);

} // namespace schemalink::testing
