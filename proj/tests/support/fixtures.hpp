#pragma once

#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "irf/corpus.hpp"
#include "irf/index.hpp"
#include "oracles.hpp"

namespace fixture {

/// Lowercasing only: no stopwords, no stemming.
inline irf::TokenizerConfig plain() {
    irf::TokenizerConfig c;
    c.stopwords.clear();
    c.stemming = irf::Stemming::none;
    return c;
}

/// Passages "p0", "p1", ... with the given texts.
inline irf::PassageCollection collection(const std::vector<std::string>& texts) {
    std::vector<irf::Passage> ps;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        irf::Passage p;
        p.passage_id = fmt::format("p{}", i);
        p.doc_id = fmt::format("d{}", i);
        p.text = texts[i];
        p.tokens = irf::tokenize(texts[i], plain());
        ps.push_back(std::move(p));
    }
    return irf::PassageCollection(std::move(ps));
}

inline irf::Query query(const std::string& text, const std::string& id = "q1") {
    return irf::Query{id, text, irf::tokenize(text, plain())};
}

/// Random texts over words "w0".."w{vocab-1}" with skewed frequencies.
inline std::vector<std::string> random_texts(std::mt19937_64& rng, std::size_t docs, std::size_t vocab,
                                             std::size_t min_len, std::size_t max_len) {
    std::vector<double> weights(vocab);
    for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::vector<std::string> out;
    for (std::size_t d = 0; d < docs; ++d) {
        std::string text;
        const std::size_t n = len(rng);
        for (std::size_t k = 0; k < n; ++k) {
            if (k) text += ' ';
            text += fmt::format("w{}", word(rng));
        }
        out.push_back(text);
    }
    return out;
}

/// The oracle view of a collection.
inline oracle::Corpus corpus_of(const irf::PassageCollection& c) {
    oracle::Corpus o;
    for (const auto& p : c.passages()) o.docs.push_back(p.tokens);
    return o;
}

}  // namespace fixture
