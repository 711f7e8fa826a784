#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "irf/synthgen.hpp"
#include "irf/retrieval.hpp"
#include "fixtures.hpp"

using namespace irf;

namespace {

GeneratorConfig small() {
    GeneratorConfig c;
    c.num_queries = 8;
    c.relevant_per_query = 6;
    c.noise_passages = 200;
    c.vocab_size = 300;
    return c;
}

std::string corpus_bytes(const SyntheticData& d) {
    std::ostringstream out;
    write_corpus(out, d.collection);
    return out.str();
}

}  // namespace

TEST_CASE("generator defaults") {
    GeneratorConfig c;
    CHECK(c.topic_concentration == 0.6);
    CHECK(c.num_queries == 50);
    CHECK(c.vocab_size == 500);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("generation is deterministic in the seed") {
    auto c = small();
    auto a = generate(c), b = generate(c);
    CHECK(corpus_bytes(a) == corpus_bytes(b));
    CHECK(a.qrels.entries() == b.qrels.entries());
    c.seed = 2;
    CHECK(corpus_bytes(generate(c)) != corpus_bytes(a));
}

TEST_CASE("shape of the generated data") {
    auto c = small();
    auto d = generate(c);
    CHECK(d.collection.size() == c.num_queries * c.relevant_per_query + c.noise_passages);
    CHECK(d.queries.size() == c.num_queries);
    CHECK(d.qrels.size() == c.num_queries * c.relevant_per_query);
    for (const auto& q : d.queries) {
        CHECK(d.qrels.relevant(q.query_id).size() == c.relevant_per_query);
        CHECK(q.tokens.size() == c.query_length);
    }
    for (const auto& p : d.collection.passages()) {
        CHECK(p.tokens.size() >= 1);
        CHECK(p.tokens.size() <= c.max_length);
    }
}

TEST_CASE("planted signal: head terms are denser and QL prefers relevant passages") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = small();
        c.seed = seed;
        auto d = generate(c);
        auto index = Index::build(d.collection);
        for (const auto& q : d.queries) {
            auto rel = d.qrels.relevant(q.query_id);
            std::set<std::string> rs(rel.begin(), rel.end());
            double rel_hits = 0, rel_len = 0, noise_hits = 0, noise_len = 0;
            for (const auto& p : d.collection.passages()) {
                std::size_t hits = 0;
                for (const auto& t : p.tokens) hits += oracle::count(q.tokens, t) > 0 ? 1 : 0;
                if (rs.contains(p.passage_id)) {
                    rel_hits += hits;
                    rel_len += p.tokens.size();
                } else if (!d.qrels.grade(q.query_id, p.passage_id)) {
                    bool owned = false;
                    for (const auto& other : d.queries) owned = owned || d.qrels.is_relevant(other.query_id, p.passage_id);
                    if (owned) continue;
                    noise_hits += hits;
                    noise_len += p.tokens.size();
                }
            }
            CHECK(rel_hits / rel_len > noise_hits / noise_len);

            auto scores = score_ql(QueryModel::mle(q.tokens), index, {});
            double rel_score = 0, noise_score = 0;
            std::size_t nr = 0, nn = 0;
            for (PassageRef r = 0; r < index.passage_count(); ++r) {
                if (rs.contains(index.passage_id(r))) {
                    rel_score += scores[r];
                    ++nr;
                } else {
                    noise_score += scores[r];
                    ++nn;
                }
            }
            CHECK(rel_score / nr > noise_score / nn);
        }
    }
}

TEST_CASE("configuration errors") {
    auto c = small();
    c.vocab_size = 20;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(generate(c), std::invalid_argument);
    c = small();
    c.num_queries = 0;
    CHECK_THROWS_AS(generate(c), std::invalid_argument);
    c = small();
    c.topic_concentration = 1.5;
    CHECK_THROWS_AS(generate(c), std::invalid_argument);
    c = small();
    c.min_length = 50;
    CHECK_THROWS_AS(generate(c), std::invalid_argument);
    CHECK_THROWS(GeneratorConfig::from_json(nlohmann::json{{"vocabulary", 10}}));
    auto j = small().to_json();
    CHECK(GeneratorConfig::from_json(j).to_json() == j);
}

TEST_CASE("written files load back") {
    auto d = generate(small());
    auto dir = std::filesystem::temp_directory_path() / "irf_synth_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_synthetic(dir, d);
    auto collection = ingest_corpus(dir / "corpus.jsonl", TokenizerConfig::retrieval_default());
    CHECK(collection.size() == d.collection.size());
    auto queries = load_queries(dir / "queries.tsv", TokenizerConfig::retrieval_default());
    CHECK(queries.size() == d.queries.size());
    CHECK(load_qrels(dir / "qrels.txt").entries() == d.qrels.entries());
    std::filesystem::remove_all(dir);
}
