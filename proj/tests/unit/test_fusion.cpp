#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "irf/fusion.hpp"
#include "fixtures.hpp"

using namespace irf;

namespace {

/// A collection over six words with 2-d vectors, plus its index and context.
struct World {
    PassageCollection collection;
    Index index;
    std::shared_ptr<const EmbeddingModel> model;
    std::unique_ptr<SemanticContext> semantic;

    explicit World(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const std::vector<std::string> vocab{"apple", "banana", "cherry", "grape", "lemon", "mango"};
        std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1), len(1, 6);
        std::vector<std::string> texts;
        for (int d = 0; d < 30; ++d) {
            std::string t;
            for (std::size_t k = len(rng); k > 0; --k) t += vocab[word(rng)] + " ";
            texts.push_back(t);
        }
        collection = fixture::collection(texts);
        index = Index::build(collection);
        std::normal_distribution<float> g(0.0f, 1.0f);
        std::vector<std::vector<float>> vecs;
        for (std::size_t w = 0; w < vocab.size(); ++w) vecs.push_back({g(rng), g(rng), g(rng)});
        model = std::make_shared<const EmbeddingModel>(make_embedding_model(vocab, vecs));
        semantic = std::make_unique<SemanticContext>(model, collection);
    }
};

std::vector<PassageRef> ids(const RankedList& l) {
    return l.passages();
}

}  // namespace

TEST_CASE("lambda_sf grids") {
    CHECK(lambda_sf_grid("webap") == std::vector<double>{5, 10, 15, 20, 25, 30, 35, 40});
    CHECK(lambda_sf_grid("psgrobust") == std::vector<double>{0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5});
    CHECK_THROWS_AS(lambda_sf_grid("trec"), std::invalid_argument);
}

TEST_CASE("semantic score against the pool centroid") {
    std::vector<std::vector<double>> pool{{1, 0}, {0, 1}};
    std::vector<double> cand{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
    CHECK(semantic_score(pool, cand) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::vector<double>> one{{3, 4}};
    std::vector<double> d{4, 3};
    CHECK(semantic_score(one, d) == doctest::Approx(cosine(one[0], d)));

    std::vector<std::vector<double>> none;
    CHECK_THROWS_AS(semantic_score(none, d), std::invalid_argument);
    std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(semantic_score(one, three), std::invalid_argument);
}

TEST_CASE("semantic score over a representation table") {
    RepresentationTable t;
    t.dim = 2;
    t.rows = {1, 0, 0, 1, 0, 0, 1, 1};
    t.valid = {1, 1, 0, 1};
    std::vector<PassageRef> pool{0, 1, 2};
    CHECK(semantic_score(pool, 3, t) == doctest::Approx(1.0));
    CHECK(semantic_score(pool, 2, t) == 0.0);
    std::vector<PassageRef> invalid{2};
    CHECK(semantic_score(invalid, 3, t) == 0.0);
    CHECK_FALSE(pool_centroid(invalid, t).has_value());
}

TEST_CASE("property: fusion reranks the same passages") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        World w(seed);
        auto q = fixture::query("apple cherry");
        auto base = rank_ql(QueryModel::mle(q.tokens), w.index, {}, 20);
        FeedbackState state;
        state.relevant_pool = {static_cast<PassageRef>(seed % 30), static_cast<PassageRef>((seed * 7) % 30)};
        const auto& table = w.semantic->representations(Representation::avg_w2v);

        FusionConfig off{0.0, Representation::avg_w2v};
        CHECK(fused_rank(base, state, *w.semantic, off, w.index).entries == base.entries);

        FusionConfig mid{1.0, Representation::avg_w2v};
        auto fused = fused_rank(base, state, *w.semantic, mid, w.index);
        auto a = ids(fused), b = ids(base);
        CHECK(std::set<PassageRef>(a.begin(), a.end()) == std::set<PassageRef>(b.begin(), b.end()));
        for (std::size_t i = 0; i < fused.entries.size(); ++i) {
            const auto& e = fused.entries[i];
            auto orig = std::find_if(base.entries.begin(), base.entries.end(),
                                     [&](const auto& x) { return x.passage == e.passage; });
            CHECK(e.score == doctest::Approx(orig->score +
                                             semantic_score(state.relevant_pool, e.passage, table)).epsilon(1e-12));
            if (i > 0) CHECK(fused.entries[i - 1].score >= e.score);
        }

        FusionConfig huge{1e9, Representation::avg_w2v};
        auto sem = fused_rank(base, state, *w.semantic, huge, w.index);
        for (std::size_t i = 1; i < sem.entries.size(); ++i) {
            CHECK(semantic_score(state.relevant_pool, sem.entries[i - 1].passage, table) >=
                  semantic_score(state.relevant_pool, sem.entries[i].passage, table) - 1e-6);
        }

        FeedbackState empty;
        CHECK(fused_rank(base, empty, *w.semantic, mid, w.index).entries == base.entries);
    }
}

TEST_CASE("fusion configuration is validated") {
    World w(1);
    auto base = rank_ql(QueryModel::mle(fixture::query("apple").tokens), w.index, {}, 5);
    FeedbackState state;
    state.relevant_pool = {0};
    FusionConfig bad{-1.0, Representation::avg_w2v};
    CHECK_THROWS_AS(fused_rank(base, state, *w.semantic, bad, w.index), std::invalid_argument);
}
