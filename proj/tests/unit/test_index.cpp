#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "irf/error.hpp"
#include "irf/index.hpp"
#include "fixtures.hpp"

using namespace irf;

TEST_CASE("hand-counted statistics") {
    auto idx = Index::build(fixture::collection({"a b", "a"}));
    auto a = *idx.term_id("a");
    auto b = *idx.term_id("b");
    CHECK(idx.document_frequency(a) == 2);
    CHECK(idx.collection_frequency(a) == 2);
    CHECK(idx.document_frequency(b) == 1);
    CHECK(idx.total_tokens() == 3);
    CHECK(idx.passage_count() == 2);
    CHECK(idx.doc_length(0) == 2);
    CHECK(idx.average_length() == doctest::Approx(1.5));

    auto single = Index::build(fixture::collection({"a a"}));
    CHECK(single.collection_frequency(*single.term_id("a")) == 2);
    CHECK(single.document_frequency(*single.term_id("a")) == 1);
}

TEST_CASE("empty collection is rejected") {
    CHECK_THROWS_AS(Index::build(PassageCollection{}), InputError);
}

TEST_CASE("collection probability") {
    auto idx = Index::build(fixture::collection({"a b"}));
    CHECK(idx.collection_prob("a") == 0.5);
    CHECK(idx.collection_prob("zzz") == 0.0);
    CHECK(collection_prob(idx, "b") == 0.5);
}

TEST_CASE("tf-idf vectors") {
    auto c = fixture::collection({"a a", "b", "a b"});
    auto idx = Index::build(c);
    // a appears in 2 of 3 passages
    CHECK(tfidf_vector(0, idx).weight("a") == doctest::Approx(2.0 * std::log(1.5)).epsilon(1e-12));

    auto two = fixture::collection({"a a", "b"});
    auto idx2 = Index::build(two);
    CHECK(tfidf_vector(0, idx2).weight("a") == doctest::Approx(1.3862943611).epsilon(1e-9));

    auto all = Index::build(fixture::collection({"x", "x y"}));
    CHECK(tfidf_vector(0, all).weight("x") == 0.0);

    Passage empty;
    CHECK(tfidf_vector(empty, idx).weights.empty());
    Passage unseen;
    unseen.tokens = {"zzz"};
    CHECK(tfidf_vector(unseen, idx).weights.empty());
}

TEST_CASE("tie-break order follows passage ids") {
    std::vector<Passage> ps;
    for (const char* id : {"b", "c", "a"}) {
        ps.push_back(Passage{id, "d", "x", {"x"}});
    }
    auto idx = Index::build(PassageCollection(std::move(ps)));
    CHECK(idx.id_order(0) == 1);
    CHECK(idx.id_order(1) == 2);
    CHECK(idx.id_order(2) == 0);
    CHECK(idx.find_passage("c") == PassageRef{1});
}

TEST_CASE("property: audit passes and statistics match brute-force counts on random corpora") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        auto c = fixture::collection(fixture::random_texts(rng, 25, 15, 0, 10));
        auto idx = Index::build(c);
        idx.audit();
        auto o = fixture::corpus_of(c);
        CHECK(idx.total_tokens() == o.total());
        double sum = 0.0;
        for (TermId t = 0; t < idx.term_count(); ++t) {
            const auto& w = idx.term(t);
            CHECK(idx.document_frequency(t) == o.df(w));
            CHECK(idx.collection_prob(t) == doctest::Approx(o.p_c(w)).epsilon(1e-12));
            CHECK(idx.idf(t) == doctest::Approx(o.idf(w)).epsilon(1e-12));
            sum += idx.collection_prob(t);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        for (PassageRef p = 0; p < c.size(); ++p) {
            std::size_t len = 0;
            for (const auto& tc : idx.passage_terms(p)) {
                CHECK(tc.tf == oracle::count(c[p].tokens, idx.term(tc.term)));
                len += tc.tf;
            }
            CHECK(len == idx.doc_length(p));
        }
    }
}

TEST_CASE("snapshot round-trips and is byte-stable") {
    std::mt19937_64 rng(29);
    auto idx = Index::build(fixture::collection(fixture::random_texts(rng, 40, 30, 1, 9)));
    std::stringstream a, b;
    idx.write(a);
    Index::build(fixture::collection([&] {
        std::mt19937_64 again(29);
        return fixture::random_texts(again, 40, 30, 1, 9);
    }())).write(b);
    CHECK(a.str() == b.str());
    auto back = Index::read(a);
    CHECK(back == idx);
    back.audit();
}

TEST_CASE("corrupt snapshots are rejected") {
    std::istringstream junk("definitely not an index");
    CHECK_THROWS_AS(Index::read(junk), InputError);
    auto idx = Index::build(fixture::collection({"a b"}));
    std::stringstream buf;
    idx.write(buf);
    auto bytes = buf.str();
    std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(Index::read(truncated), InputError);
}
