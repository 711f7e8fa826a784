#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "irf/embeddings.hpp"
#include "irf/error.hpp"
#include "fixtures.hpp"

using namespace irf;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double sd = 0.5) {
    std::normal_distribution<double> g(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

std::vector<std::vector<double>> rows_of(const std::vector<double>& flat, std::size_t dim) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r * dim < flat.size(); ++r) out.emplace_back(flat.begin() + r * dim, flat.begin() + (r + 1) * dim);
    return out;
}

PassageCollection training_corpus(std::uint64_t seed, std::size_t docs = 120) {
    std::mt19937_64 rng(seed);
    return fixture::collection(fixture::random_texts(rng, docs, 30, 5, 15));
}

TrainConfig small_config(TrainMode mode) {
    TrainConfig c;
    c.dim = 8;
    c.negatives = 3;
    c.epochs = 2;
    c.window = 2;
    c.min_count = 2;
    c.mode = mode;
    return c;
}

}  // namespace

TEST_CASE("training defaults") {
    TrainConfig c;
    CHECK(c.dim == 100);
    CHECK(c.negatives == 10);
    CHECK(c.learning_rate == 0.05);
    CHECK(c.batch_size == 256);
    CHECK(c.corruption_q == 0.9);
    CHECK(c.min_count == 5);
}

TEST_CASE("negative-sampling loss agrees with the naive formula") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t dim = 1 + trial % 9, rows = 1 + trial % 6;
        auto h = random_vector(rng, dim, 1.0);
        auto u = random_vector(rng, dim * rows, 1.0);
        CHECK(sgns::loss<double>(h, u) == doctest::Approx(oracle::sgns_loss(h, rows_of(u, dim))).epsilon(1e-12));
    }
    // dot = -1600: the naive ln sigma underflows, the stable form does not
    std::vector<double> h{40.0}, u{-40.0};
    CHECK(sgns::loss<double>(h, u) == doctest::Approx(1600.0).epsilon(1e-12));
}

TEST_CASE("property: skip-gram gradients match central differences") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 2 + trial % 10, rows = 2 + trial % 10;
        auto h = random_vector(rng, dim);
        auto u = random_vector(rng, dim * rows);
        std::vector<double> gh(dim, 0.0), gu(u.size(), 0.0);
        sgns::loss_and_grad<double>(h, u, gh, gu);

        auto num_h = oracle::numeric_gradient([&](const std::vector<double>& x) {
            return oracle::sgns_loss(x, rows_of(u, dim));
        }, h);
        CHECK(oracle::relative_error(gh, num_h) < 1e-4);
        auto num_u = oracle::numeric_gradient([&](const std::vector<double>& x) {
            return oracle::sgns_loss(h, rows_of(x, dim));
        }, u);
        CHECK(oracle::relative_error(gu, num_u) < 1e-4);
    }
}

TEST_CASE("property: corrupted-mean input gradients match central differences") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t dim = 3 + trial % 5, n = 2 + trial % 6, rows = 4;
        const double q = 0.5;
        std::vector<std::vector<float>> words(n);
        for (auto& w : words) {
            auto v = random_vector(rng, dim);
            w.assign(v.begin(), v.end());
        }
        auto u = random_vector(rng, dim * rows);
        std::vector<std::span<const float>> spans(words.begin(), words.end());
        std::vector<double> h(dim);
        std::vector<std::size_t> kept;
        std::mt19937_64 drop(trial);
        corrupted_mean<std::mt19937_64>(spans, q, drop, h, &kept);

        // analytic: each kept word receives scale * dL/dh, dropped words nothing
        std::vector<double> gh(dim, 0.0), gu(u.size(), 0.0);
        sgns::loss_and_grad<double>(h, u, gh, gu);
        const double scale = corruption_scale(n, q);
        std::vector<double> analytic(n * dim, 0.0), flat;
        for (auto i : kept)
            for (std::size_t d = 0; d < dim; ++d) analytic[i * dim + d] = scale * gh[d];
        for (const auto& w : words) flat.insert(flat.end(), w.begin(), w.end());

        auto numeric = oracle::numeric_gradient([&](const std::vector<double>& x) {
            std::vector<double> hh(dim, 0.0);
            for (auto i : kept)
                for (std::size_t d = 0; d < dim; ++d) hh[d] += x[i * dim + d] / ((1.0 - q) * static_cast<double>(n));
            return oracle::sgns_loss(hh, rows_of(u, dim));
        }, flat);
        CHECK(oracle::relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("unbiased dropout") {
    std::vector<std::vector<float>> words{{1.0f, 2.0f}, {3.0f, -2.0f}, {5.0f, 0.0f}};
    std::vector<std::span<const float>> spans(words.begin(), words.end());
    std::vector<double> plain(2), h(2);
    plain_mean(spans, plain);
    CHECK(plain[0] == doctest::Approx(3.0));
    CHECK(plain[1] == doctest::Approx(0.0));

    std::mt19937_64 rng(1);
    corrupted_mean<std::mt19937_64>(spans, 0.0, rng, h);
    CHECK(h == plain);

    std::vector<std::size_t> kept;
    sample_kept(5, 0.0, rng, kept);
    CHECK(kept == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(corruption_scale(4, 0.75) == doctest::Approx(1.0));
}

TEST_CASE("min_count filters the vocabulary") {
    auto c = fixture::collection({"a a a b", "a a c b", "b b c"});
    TrainConfig cfg = small_config(TrainMode::skipgram);
    cfg.min_count = 4;
    auto m = train_skipgram(c, cfg);
    CHECK(m.words() == std::vector<std::string>{"a", "b"});
    CHECK(m.word_count(0) == 5);
    CHECK_FALSE(m.word_index("c").has_value());
    cfg.min_count = 6;
    CHECK_THROWS_AS(train_skipgram(c, cfg), InputError);
}

TEST_CASE("skip-gram loss falls on a bigram corpus and shared contexts attract") {
    std::vector<std::string> texts;
    for (int i = 0; i < 60; ++i) texts.push_back("alpha beta gamma delta alpha beta gamma delta");
    for (int i = 0; i < 60; ++i) texts.push_back("one two three four one two three four");
    auto c = fixture::collection(texts);
    TrainConfig cfg = small_config(TrainMode::skipgram);
    cfg.epochs = 5;
    cfg.window = 1;
    auto m = train_skipgram(c, cfg);
    REQUIRE(m.epoch_loss().size() == 5);
    CHECK(m.epoch_loss().back() < m.epoch_loss().front());
    CHECK(m.all_finite());
    // alpha and gamma share their contexts (beta, delta); one does not
    auto a = m.word_vector(*m.word_index("alpha"));
    auto g = m.word_vector(*m.word_index("gamma"));
    auto one = m.word_vector(*m.word_index("one"));
    CHECK(cosine(a, g) > cosine(a, one));
}

TEST_CASE("single-worker training is deterministic") {
    auto c = training_corpus(11);
    for (auto mode : {TrainMode::skipgram, TrainMode::pv_hdc, TrainMode::pv_hdc_corrupted}) {
        CAPTURE(to_string(mode));
        auto cfg = small_config(mode);
        auto a = train_embeddings(c, cfg);
        CHECK(a == train_embeddings(c, cfg));
        cfg.seed = 2;
        CHECK_FALSE(a == train_embeddings(c, cfg));
        CHECK(a.all_finite());
    }
}

TEST_CASE("passage vectors by training mode") {
    auto c = training_corpus(13, 40);
    auto sg = train_embeddings(c, small_config(TrainMode::skipgram));
    CHECK(sg.passage_count() == 0);

    auto pv = train_embeddings(c, small_config(TrainMode::pv_hdc));
    CHECK(pv.passage_count() == c.size());
    CHECK(pv.passage_ids().front() == "p0");

    auto pvc = train_embeddings(c, small_config(TrainMode::pv_hdc_corrupted));
    REQUIRE(pvc.passage_count() == c.size());
    // stored row is the plain mean of the passage's word vectors
    for (std::size_t p = 0; p < c.size(); ++p) {
        std::vector<std::span<const float>> rows;
        for (const auto& t : c[static_cast<PassageRef>(p)].tokens)
            if (auto id = pvc.word_index(t)) rows.push_back(pvc.word_vector(*id));
        std::vector<double> mean(pvc.dim());
        plain_mean(rows, mean);
        auto stored = pvc.passage_vector(static_cast<std::uint32_t>(p));
        for (std::size_t d = 0; d < mean.size(); ++d) CHECK(stored[d] == doctest::Approx(mean[d]).epsilon(1e-6));
    }
}

TEST_CASE("model file round trip and corruption") {
    auto c = training_corpus(17, 40);
    auto m = train_embeddings(c, small_config(TrainMode::pv_hdc));
    std::stringstream buf;
    m.write(buf);
    const std::string bytes = buf.str();
    std::stringstream in(bytes);
    CHECK(EmbeddingModel::read(in) == m);

    std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(EmbeddingModel::read(truncated), InputError);
    std::string bad = bytes;
    bad[0] = 'X';
    std::stringstream wrong(bad);
    CHECK_THROWS_AS(EmbeddingModel::read(wrong), InputError);
    CHECK_THROWS_AS(EmbeddingModel::load("/nonexistent/model.bin"), InputError);
}

TEST_CASE("training config JSON") {
    auto c = TrainConfig::from_json(nlohmann::json{{"dim", 16}, {"mode", "pvc"}});
    CHECK(c.dim == 16);
    CHECK(c.mode == TrainMode::pv_hdc_corrupted);
    CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS(TrainConfig::from_json(nlohmann::json{{"dimension", 16}}));
    CHECK_THROWS(TrainConfig::from_json(nlohmann::json{{"corruption_q", 1.0}}));
    CHECK_THROWS(parse_train_mode("glove"));
}

TEST_CASE("passage representations") {
    auto c = fixture::collection({"x y", "x z", "x x"});
    auto idx = Index::build(c);
    auto m = make_embedding_model({"x", "y", "z"}, {{2.0f, 0.0f}, {0.0f, 4.0f}, {1.0f, 1.0f}});

    SUBCASE("avg of identical vectors is that vector") {
        CHECK(passage_vector(c[2], m, Representation::avg_w2v, idx) == std::vector<double>{2.0, 0.0});
    }
    SUBCASE("avg is the uniform mean") {
        CHECK(passage_vector(c[0], m, Representation::avg_w2v, idx) == std::vector<double>{1.0, 2.0});
    }
    SUBCASE("a zero-idf token drops out of the idf mean") {
        // x occurs everywhere, so idf(x) = 0 and only y remains
        auto v = passage_vector(c[0], m, Representation::idf_w2v, idx);
        CHECK(v[0] == doctest::Approx(0.0));
        CHECK(v[1] == doctest::Approx(4.0));
        CHECK_FALSE(try_passage_vector(c[2], m, Representation::idf_w2v, idx).has_value());
    }
    SUBCASE("no usable token or stored row") {
        auto other = fixture::collection({"q r"});
        CHECK_FALSE(try_passage_vector(other[0], m, Representation::avg_w2v, idx).has_value());
        CHECK_THROWS_AS(passage_vector(other[0], m, Representation::avg_w2v, idx), std::domain_error);
        CHECK_FALSE(try_passage_vector(c[0], m, Representation::pv, idx).has_value());
    }
    CHECK(parse_representation("pvc") == Representation::pvc);
    CHECK_THROWS(parse_representation("bert"));
}

TEST_CASE("cosine") {
    std::vector<double> a{1, 0}, b{0, 1}, c{1, 1}, z{0, 0}, three{1, 2, 3};
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK(cosine(a, b) == doctest::Approx(0.0));
    CHECK(cosine(a, c) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(cosine(a, z) == 0.0);
    CHECK_THROWS_AS(cosine(a, three), std::invalid_argument);

    std::mt19937_64 rng(19);
    for (int i = 0; i < 200; ++i) {
        auto u = random_vector(rng, 5, 10.0), v = random_vector(rng, 5, 10.0);
        const double x = cosine(u, v);
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
        CHECK(cosine(u, u) == doctest::Approx(1.0));
    }
}

TEST_CASE("nearest neighbours include the word itself") {
    auto m = make_embedding_model({"a", "b", "c"}, {{1.0f, 0.0f}, {1.0f, 0.1f}, {-1.0f, 0.0f}});
    auto nn = m.nearest(0, 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0].first == 0);
    CHECK(nn[1].first == 1);
    CHECK(m.nearest(0, 10).size() == 3);
}
