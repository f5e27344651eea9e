#include "fixtures.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;

namespace schemalink::testing {

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "schemalink-XXXXXX").string();
    if (!mkdtemp(tmpl.data()))
        throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

void make_sqlite(const fs::path& file, const std::string& statements) {
    if (file.has_parent_path())
        fs::create_directories(file.parent_path());
    fs::remove(file);
    sqlite3* db = nullptr;
    if (sqlite3_open(file.string().c_str(), &db) != SQLITE_OK)
        throw std::runtime_error("cannot create " + file.string());
    char* err = nullptr;
    const int rc = sqlite3_exec(db, statements.c_str(), nullptr, nullptr, &err);
    std::string message = err ? err : "";
    sqlite3_free(err);
    sqlite3_close(db);
    if (rc != SQLITE_OK)
        throw std::runtime_error("fixture SQL failed: " + message);
}

const char* const kSchoolDdl = R"sql(
CREATE TABLE districts (district_id INTEGER PRIMARY KEY, name TEXT);
CREATE TABLE schools (
  school_id INTEGER PRIMARY KEY,
  district_id INTEGER REFERENCES districts(district_id),
  name TEXT,
  city TEXT
);
CREATE TABLE students (
  student_id INTEGER PRIMARY KEY,
  school_id INTEGER REFERENCES schools(school_id),
  name TEXT,
  grade INTEGER
);
CREATE TABLE courses (
  course_id INTEGER PRIMARY KEY,
  school_id INTEGER REFERENCES schools(school_id),
  title TEXT
);
CREATE TABLE enrollments (
  enrollment_id INTEGER PRIMARY KEY,
  student_id INTEGER REFERENCES students(student_id),
  course_id INTEGER REFERENCES courses(course_id),
  score REAL
);
CREATE TABLE teachers (
  teacher_id INTEGER PRIMARY KEY,
  course_id INTEGER REFERENCES courses(course_id),
  school_id INTEGER REFERENCES schools(school_id),
  name TEXT
);
INSERT INTO districts VALUES (1, 'North'), (2, 'South');
INSERT INTO schools VALUES (1, 1, 'Lincoln High', 'Springfield'), (2, 1, 'Adams Prep', 'Shelbyville'),
                           (3, 2, 'Grant Academy', 'Springfield');
INSERT INTO students VALUES (1, 1, 'Ada', 10), (2, 1, 'Ben', 11), (3, 2, 'Cy', 9), (4, 3, 'Di', 12);
INSERT INTO courses VALUES (1, 1, 'Algebra'), (2, 1, 'Biology'), (3, 2, 'Chemistry'), (4, 3, 'Drama');
INSERT INTO enrollments VALUES (1, 1, 1, 91.5), (2, 1, 2, 78.0), (3, 2, 1, 66.0), (4, 3, 3, 88.0), (5, 4, 4, 95.0);
INSERT INTO teachers VALUES (1, 1, 1, 'Mr. Hale'), (2, 2, 1, 'Ms. Ivy'), (3, 3, 2, 'Dr. Jun'), (4, 4, 3, 'Mx. Kay');
)sql";

const std::vector<ToyQuestion>& toy_questions() {
    static const std::vector<ToyQuestion> questions = {
        {"1", "Which district is each school in?", {"districts"}, {"schools"},
         "SELECT s.name, d.name FROM schools AS s JOIN districts AS d ON s.district_id = d.district_id",
         {"districts", "schools"}, "simple"},
        {"2", "How many students attend each school?", {"schools"}, {"students"},
         "SELECT sc.name, COUNT(*) FROM schools sc JOIN students st ON st.school_id = sc.school_id GROUP BY sc.name",
         {"schools", "students"}, "simple"},
        {"3", "List every teacher with the title of the course they teach.", {"teachers"}, {"courses"},
         "SELECT t.name, c.title FROM teachers t INNER JOIN courses c ON t.course_id = c.course_id",
         {"courses", "teachers"}, "simple"},
        {"4", "What scores did each student receive?", {"students"}, {"enrollments"},
         "SELECT st.name, e.score FROM students st JOIN enrollments e ON e.student_id = st.student_id",
         {"enrollments", "students"}, "simple"},
        {"5", "Which students are enrolled in Algebra?", {"courses"}, {"students"},
         "SELECT st.name FROM courses c JOIN enrollments e ON e.course_id = c.course_id "
         "JOIN students st ON st.student_id = e.student_id WHERE c.title = 'Algebra'",
         {"courses", "enrollments", "students"}, "moderate"},
        {"6", "Name the teachers working at schools in the North district.", {"teachers"}, {"districts", "schools"},
         "SELECT t.name FROM teachers t JOIN schools s ON t.school_id = s.school_id "
         "JOIN districts d ON d.district_id = s.district_id WHERE d.name = 'North'",
         {"districts", "schools", "teachers"}, "moderate"},
        {"7", "Which schools are located in Springfield?", {"schools"}, {"schools"},
         "SELECT name FROM schools WHERE city = 'Springfield'", {"schools"}, "simple"},
        {"8", "What is the average enrollment score per school across its courses?", {"schools"}, {"enrollments"},
         "SELECT s.name, AVG(e.score) FROM schools s JOIN courses c ON c.school_id = s.school_id "
         "JOIN enrollments e ON e.course_id = c.course_id GROUP BY s.name",
         {"courses", "enrollments", "schools"}, "challenging"},
        {"9", "How many teachers does each district employ?", {"districts"}, {"teachers"},
         "SELECT d.name, COUNT(t.teacher_id) FROM districts d JOIN schools s ON s.district_id = d.district_id "
         "JOIN teachers t ON t.school_id = s.school_id GROUP BY d.name",
         {"districts", "schools", "teachers"}, "moderate"},
        {"10", "What is the best score recorded in each teacher's course?", {"teachers"}, {"enrollments"},
         "SELECT t.name, MAX(e.score) FROM teachers t JOIN courses c ON c.course_id = t.course_id "
         "JOIN enrollments e ON e.course_id = c.course_id GROUP BY t.name",
         {"courses", "enrollments", "teachers"}, "challenging"},
    };
    return questions;
}

ToyCorpus write_toy_corpus(const fs::path& dir, std::size_t limit) {
    ToyCorpus corpus{dir / "schemas", dir / "dev.json"};
    make_sqlite(corpus.schemas / "school" / "school.sqlite", kSchoolDdl);
    nlohmann::json rows = nlohmann::json::array();
    const auto& qs = toy_questions();
    for (std::size_t i = 0; i < qs.size() && i < limit; ++i) {
        rows.push_back({{"question_id", std::stoi(qs[i].id)},
                        {"db_id", "school"},
                        {"question", qs[i].text},
                        {"evidence", ""},
                        {"SQL", qs[i].gold_sql},
                        {"difficulty", qs[i].difficulty}});
    }
    write_text(corpus.dataset, rows.dump(2));
    return corpus;
}

std::string scripted_reply(const CompletionRequest& request) {
    const auto& templ = [](PromptId id) { return std::string(prompt_template(id).system_text); };
    if (request.system_text == templ(PromptId::PathSelect))
        return "The first path covers the question.\nFinal Answer: path_id: 1";
    for (const auto& q : toy_questions()) {
        if (request.user_text.find("Question: " + q.text + "\n") == std::string::npos)
            continue;
        if (request.system_text == templ(PromptId::SrcDst))
            return "Reasoning omitted.\n" + format_src_dst(q.sources, q.destinations);
        return "```sql\n" + q.gold_sql + "\n```";
    }
    throw std::runtime_error("no scripted reply for request:\n" + request.user_text);
}

// ---------------------------------------------------------------------------

SmallGraph random_graph(std::size_t nodes, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    SmallGraph g;
    g.nodes = nodes;
    for (std::size_t a = 0; a < nodes; ++a)
        for (std::size_t b = a + 1; b < nodes; ++b)
            if (coin(rng))
                g.edges.emplace_back(a, b);
    return g;
}

Schema schema_for(const SmallGraph& g) {
    Schema s;
    s.database_id = "random";
    for (std::size_t i = 0; i < g.nodes; ++i)
        s.tables.push_back({"t" + std::to_string(i), {{"pk", "INTEGER", true}}});
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        const auto [a, b] = g.edges[k];
        const std::string col = "fk" + std::to_string(k);
        s.tables[a].columns.push_back({col, "INTEGER", false});
        s.foreign_keys.push_back({s.tables[a].name, col, s.tables[b].name, "pk", EdgeProvenance::DeclaredFk});
    }
    return s;
}

std::vector<std::vector<std::size_t>> brute_force_shortest_paths(const SmallGraph& g, std::size_t src,
                                                                 std::size_t dst) {
    std::vector<std::vector<std::size_t>> adj(g.nodes);
    for (const auto& [a, b] : g.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::vector<std::size_t>> all;
    std::vector<std::size_t> stack{src};
    std::vector<bool> seen(g.nodes, false);
    seen[src] = true;
    std::function<void(std::size_t)> dfs = [&](std::size_t u) {
        if (u == dst) {
            all.push_back(stack);
            return;
        }
        for (auto v : adj[u]) {
            if (seen[v])
                continue;
            seen[v] = true;
            stack.push_back(v);
            dfs(v);
            stack.pop_back();
            seen[v] = false;
        }
    };
    dfs(src);
    if (all.empty())
        return all;
    std::size_t best = all.front().size();
    for (const auto& p : all)
        best = std::min(best, p.size());
    std::erase_if(all, [&](const auto& p) { return p.size() != best; });
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace schemalink::testing
