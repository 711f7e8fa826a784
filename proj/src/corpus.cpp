#include "irf/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "irf/error.hpp"
#include "irf/log.hpp"

namespace irf {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

std::string string_field(const nlohmann::json& obj, const char* key, const std::string& source,
                         std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(source, line, std::string("missing \"") + key + "\" field");
    }
    if (!it->is_string()) {
        throw ParseError(source, line, std::string("field \"") + key + "\" is not a string");
    }
    return it->get<std::string>();
}

}  // namespace

void Judgments::set(const std::string& query_id, const std::string& passage_id, int grade) {
    grades_[query_id][passage_id] = grade;
}

std::optional<int> Judgments::grade(std::string_view query_id, std::string_view passage_id) const {
    auto q = grades_.find(query_id);
    if (q == grades_.end()) {
        return std::nullopt;
    }
    auto p = q->second.find(passage_id);
    if (p == q->second.end()) {
        return std::nullopt;
    }
    return p->second;
}

bool Judgments::is_relevant(std::string_view query_id, std::string_view passage_id) const {
    auto g = grade(query_id, passage_id);
    return g && *g > 0;
}

bool Judgments::has_query(std::string_view query_id) const {
    return grades_.find(query_id) != grades_.end();
}

std::vector<std::string> Judgments::relevant(std::string_view query_id) const {
    std::vector<std::string> out;
    auto q = grades_.find(query_id);
    if (q == grades_.end()) {
        return out;
    }
    for (const auto& [pid, g] : q->second) {
        if (g > 0) {
            out.push_back(pid);
        }
    }
    return out;
}

std::vector<std::string> Judgments::query_ids() const {
    std::vector<std::string> out;
    out.reserve(grades_.size());
    for (const auto& [qid, _] : grades_) {
        out.push_back(qid);
    }
    return out;
}

std::size_t Judgments::size() const {
    std::size_t n = 0;
    for (const auto& [_, m] : grades_) {
        n += m.size();
    }
    return n;
}

PassageCollection::PassageCollection(std::vector<Passage> passages) : passages_(std::move(passages)) {
    by_id_.reserve(passages_.size());
    std::set<std::string, std::less<>> vocab;
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        auto [_, inserted] = by_id_.emplace(passages_[i].passage_id, static_cast<PassageRef>(i));
        if (!inserted) {
            throw InputError("duplicate passage id: " + passages_[i].passage_id);
        }
        vocab.insert(passages_[i].tokens.begin(), passages_[i].tokens.end());
    }
    vocabulary_.assign(vocab.begin(), vocab.end());
}

std::optional<PassageRef> PassageCollection::find(std::string_view passage_id) const {
    auto it = by_id_.find(std::string(passage_id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

PassageCollection PassageCollection::retokenized(const TokenizerConfig& config) const {
    std::vector<Passage> out = passages_;
    for (auto& p : out) {
        p.tokens = tokenize(p.text, config);
    }
    return PassageCollection(std::move(out));
}

PassageCollection parse_corpus(std::istream& in, const TokenizerConfig& config, const std::string& source) {
    std::vector<Passage> passages;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(source, lineno, "expected a JSON object");
        }
        Passage p;
        p.passage_id = string_field(obj, "id", source, lineno);
        p.doc_id = string_field(obj, "doc_id", source, lineno);
        p.text = string_field(obj, "text", source, lineno);
        auto [it, inserted] = seen.emplace(p.passage_id, lineno);
        if (!inserted) {
            throw ParseError(source, lineno,
                             "duplicate passage id \"" + p.passage_id + "\" (first on line " +
                                 std::to_string(it->second) + ")");
        }
        p.tokens = tokenize(p.text, config);
        passages.push_back(std::move(p));
    }
    return PassageCollection(std::move(passages));
}

PassageCollection ingest_corpus(const std::filesystem::path& path, const TokenizerConfig& config) {
    auto in = open_input(path);
    return parse_corpus(in, config, path.string());
}

void write_corpus(std::ostream& out, const PassageCollection& collection) {
    for (const auto& p : collection.passages()) {
        nlohmann::ordered_json obj;
        obj["id"] = p.passage_id;
        obj["doc_id"] = p.doc_id;
        obj["text"] = p.text;
        out << obj.dump() << '\n';
    }
}

void write_corpus(const std::filesystem::path& path, const PassageCollection& collection) {
    auto out = open_output(path);
    write_corpus(out, collection);
}

std::vector<Query> parse_queries(std::istream& in, const TokenizerConfig& config, const std::string& source) {
    std::vector<Query> queries;
    std::set<std::string, std::less<>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(source, lineno, "expected \"qid<TAB>text\"");
        }
        Query q;
        q.query_id = std::string(trim(std::string_view(line).substr(0, tab)));
        q.text = std::string(trim(std::string_view(line).substr(tab + 1)));
        if (q.query_id.empty()) {
            throw ParseError(source, lineno, "empty query id");
        }
        if (!seen.insert(q.query_id).second) {
            throw ParseError(source, lineno, "duplicate query id \"" + q.query_id + "\"");
        }
        q.tokens = tokenize(q.text, config);
        queries.push_back(std::move(q));
    }
    return queries;
}

std::vector<Query> load_queries(const std::filesystem::path& path, const TokenizerConfig& config) {
    auto in = open_input(path);
    return parse_queries(in, config, path.string());
}

void write_queries(std::ostream& out, const std::vector<Query>& queries) {
    for (const auto& q : queries) {
        out << q.query_id << '\t' << q.text << '\n';
    }
}

Judgments parse_qrels(std::istream& in, const std::string& source) {
    Judgments qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string qid, iter, pid, grade_text, extra;
        if (!(fields >> qid >> iter >> pid >> grade_text) || (fields >> extra)) {
            throw ParseError(source, lineno, "expected four columns \"qid iter pid grade\"");
        }
        int grade = 0;
        std::size_t used = 0;
        try {
            grade = std::stoi(grade_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != grade_text.size() || used == 0) {
            throw ParseError(source, lineno, "grade \"" + grade_text + "\" is not an integer");
        }
        if (grade < 0) {
            logger().warn("{}:{}: negative grade {} treated as non-relevant", source, lineno, grade);
            grade = 0;
        }
        if (qrels.grade(qid, pid)) {
            logger().warn("{}:{}: repeated judgment for ({}, {}); keeping the last one", source, lineno, qid,
                          pid);
        }
        qrels.set(qid, pid, grade);
    }
    return qrels;
}

Judgments load_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_qrels(in, path.string());
}

void write_qrels(std::ostream& out, const Judgments& qrels) {
    for (const auto& [qid, grades] : qrels.entries()) {
        for (const auto& [pid, g] : grades) {
            out << qid << " 0 " << pid << ' ' << g << '\n';
        }
    }
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    auto flush = [&](std::size_t end) {
        auto s = trim(text.substr(start, end - start));
        if (!s.empty()) {
            out.emplace_back(s);
        }
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '?' || c == '!') && (i + 1 == text.size() || is_space(text[i + 1]))) {
            flush(i + 1);
        }
    }
    flush(text.size());
    return out;
}

std::vector<Passage> segment_document(std::string_view doc_text, std::uint64_t seed, const std::string& doc_id) {
    auto sentences = split_sentences(doc_text);
    std::vector<Passage> out;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution three(0.5);
    std::size_t i = 0;
    while (i < sentences.size()) {
        std::size_t len = three(rng) ? 3 : 2;
        len = std::min(len, sentences.size() - i);
        Passage p;
        p.doc_id = doc_id;
        p.passage_id = doc_id + "-" + std::to_string(out.size());
        for (std::size_t k = 0; k < len; ++k) {
            if (k > 0) {
                p.text.push_back(' ');
            }
            p.text += sentences[i + k];
        }
        out.push_back(std::move(p));
        i += len;
    }
    return out;
}

}  // namespace irf
