#include <doctest.h>

#include <random>

#include "irf/text.hpp"
#include "fixtures.hpp"

using namespace irf;

TEST_CASE("tokenize lowercases, removes configured stopwords and stems") {
    TokenizerConfig c;
    c.stopwords = {"the"};
    c.stemming = Stemming::s_stemmer;
    CHECK(tokenize("The cats ran", c) == std::vector<std::string>{"cat", "ran"});
}

TEST_CASE("tokenize keeps repeats under the identity configuration") {
    CHECK(tokenize("A A a", fixture::plain()) == std::vector<std::string>{"a", "a", "a"});
}

TEST_CASE("tokenize splits on punctuation and whitespace") {
    CHECK(tokenize("Hello, world!  x-ray\t42", fixture::plain()) ==
          std::vector<std::string>{"hello", "world", "x", "ray", "42"});
    CHECK(tokenize("", fixture::plain()).empty());
    CHECK(tokenize(" ,.;! ", fixture::plain()).empty());
}

TEST_CASE("embedding tokenizer does not stem") {
    auto c = TokenizerConfig::embedding_default();
    CHECK(c.stemming == Stemming::none);
    CHECK(tokenize("passages answers", c) == std::vector<std::string>{"passages", "answers"});
    CHECK(tokenize("passages answers", TokenizerConfig::retrieval_default()) ==
          std::vector<std::string>{"passage", "answer"});
}

TEST_CASE("default stopword list is bundled and used for retrieval") {
    const auto& sw = default_stopwords();
    CHECK(sw.size() >= 300);
    for (const char* w : {"the", "a", "of", "and", "is"}) {
        CHECK(sw.contains(w));
    }
    CHECK(tokenize("the answer of it", TokenizerConfig::retrieval_default()) == std::vector<std::string>{"answer"});
}

TEST_CASE("s-stemmer rules") {
    CHECK(s_stem("ponies") == "pony");
    CHECK(s_stem("cats") == "cat");
    CHECK(s_stem("horses") == "horse");
    CHECK(s_stem("glass") == "glass");
    CHECK(s_stem("corpus") == "corpus");
    CHECK(s_stem("shoes") == "shoe");
    CHECK(s_stem("trees") == "tree");
    CHECK(s_stem("gas") == "gas");
}

TEST_CASE("porter stemmer on classic vocabulary") {
    const std::vector<std::pair<const char*, const char*>> cases{
        {"caresses", "caress"}, {"ponies", "poni"},     {"cats", "cat"},       {"agreed", "agre"},
        {"plastered", "plaster"}, {"motoring", "motor"}, {"sing", "sing"},      {"hopping", "hop"},
        {"falling", "fall"},    {"happy", "happi"},     {"relational", "relat"}, {"generalization", "gener"},
        {"hopeful", "hope"},    {"goodness", "good"},   {"adjustment", "adjust"}, {"effective", "effect"},
        {"roll", "roll"},       {"connection", "connect"}, {"connected", "connect"}, {"connecting", "connect"},
        {"running", "run"}};
    for (const auto& [in, out] : cases) {
        CAPTURE(in);
        CHECK(porter_stem(in) == out);
    }
}

TEST_CASE("stemming names parse") {
    CHECK(parse_stemming("none") == Stemming::none);
    CHECK(parse_stemming("s") == Stemming::s_stemmer);
    CHECK(parse_stemming("porter") == Stemming::porter);
    CHECK_THROWS_AS(parse_stemming("krovetz"), std::invalid_argument);
}

TEST_CASE("property: tokenize is deterministic and idempotent on rejoined output without stemming") {
    std::mt19937_64 rng(5);
    const std::string alphabet = "abcXYZ  ,.!-\t";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    auto cfg = TokenizerConfig::embedding_default();
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        for (int i = 0; i < 40; ++i) text += alphabet[pick(rng)];
        auto once = tokenize(text, cfg);
        CHECK(once == tokenize(text, cfg));
        std::string joined;
        for (const auto& t : once) {
            if (!joined.empty()) joined += ' ';
            joined += t;
        }
        CHECK(tokenize(joined, cfg) == once);
        for (const auto& t : once) {
            CHECK_FALSE(cfg.stopwords.contains(t));
            for (char ch : t) CHECK_FALSE((ch >= 'A' && ch <= 'Z'));
        }
    }
}
