#include "irf/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "irf/error.hpp"

namespace irf {

void GeneratorConfig::validate() const {
    if (num_queries < 1 || relevant_per_query < 1 || noise_passages < 1 || vocab_size < 1 || topic_size < 1 ||
        query_length < 1 || query_head < 1 || topic_stride < 1) {
        throw std::invalid_argument("generator counts must be at least 1");
    }
    if (!(topic_concentration >= 0.0 && topic_concentration <= 1.0)) {
        throw std::invalid_argument("topic_concentration must lie in [0, 1]");
    }
    if (min_length < 1 || min_length > max_length) {
        throw std::invalid_argument("passage length range must satisfy 1 <= min_length <= max_length");
    }
    if (query_head > topic_size) {
        throw std::invalid_argument("query_head cannot exceed topic_size");
    }
    if (topic_size + (num_queries - 1) * topic_stride > vocab_size) {
        throw std::invalid_argument(fmt::format("vocabulary of {} words is too small for {} topics of {} words",
                                                vocab_size, num_queries, topic_size));
    }
    if (!(zipf_exponent >= 0.0) || !(topic_skew >= 0.0)) {
        throw std::invalid_argument("skew exponents must be nonnegative");
    }
}

nlohmann::ordered_json GeneratorConfig::to_json() const {
    return {{"num_queries", num_queries},
            {"relevant_per_query", relevant_per_query},
            {"noise_passages", noise_passages},
            {"vocab_size", vocab_size},
            {"topic_concentration", topic_concentration},
            {"min_length", min_length},
            {"max_length", max_length},
            {"topic_size", topic_size},
            {"topic_stride", topic_stride},
            {"query_length", query_length},
            {"query_head", query_head},
            {"zipf_exponent", zipf_exponent},
            {"topic_skew", topic_skew},
            {"seed", seed}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "num_queries") c.num_queries = v.get<std::size_t>();
        else if (k == "relevant_per_query") c.relevant_per_query = v.get<std::size_t>();
        else if (k == "noise_passages") c.noise_passages = v.get<std::size_t>();
        else if (k == "vocab_size") c.vocab_size = v.get<std::size_t>();
        else if (k == "topic_concentration") c.topic_concentration = v.get<double>();
        else if (k == "min_length") c.min_length = v.get<std::size_t>();
        else if (k == "max_length") c.max_length = v.get<std::size_t>();
        else if (k == "topic_size") c.topic_size = v.get<std::size_t>();
        else if (k == "topic_stride") c.topic_stride = v.get<std::size_t>();
        else if (k == "query_length") c.query_length = v.get<std::size_t>();
        else if (k == "query_head") c.query_head = v.get<std::size_t>();
        else if (k == "zipf_exponent") c.zipf_exponent = v.get<double>();
        else if (k == "topic_skew") c.topic_skew = v.get<double>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else throw std::invalid_argument("unknown generator option: " + k);
    }
    c.validate();
    return c;
}

namespace {

std::vector<double> power_law(std::size_t n, double s) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
    }
    return w;
}

}  // namespace

SyntheticData generate(const GeneratorConfig& config, const TokenizerConfig& tokenizer) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const std::size_t v = config.vocab_size;
    std::vector<std::string> words(v);
    for (std::size_t i = 0; i < v; ++i) {
        words[i] = fmt::format("w{:04d}", i);
    }

    // Background: Zipf over a random ordering of the vocabulary.
    std::vector<std::size_t> bg_order(v);
    std::iota(bg_order.begin(), bg_order.end(), std::size_t{0});
    std::shuffle(bg_order.begin(), bg_order.end(), rng);
    auto bg_weights = power_law(v, config.zipf_exponent);
    std::discrete_distribution<std::size_t> background(bg_weights.begin(), bg_weights.end());

    // Topics: consecutive (possibly overlapping) slices of a second ordering.
    std::vector<std::size_t> topic_order(v);
    std::iota(topic_order.begin(), topic_order.end(), std::size_t{0});
    std::shuffle(topic_order.begin(), topic_order.end(), rng);
    auto topic_weights = power_law(config.topic_size, config.topic_skew);
    std::discrete_distribution<std::size_t> topic_pick(topic_weights.begin(), topic_weights.end());
    auto head_weights = std::vector<double>(topic_weights.begin(),
                                            topic_weights.begin() + static_cast<std::ptrdiff_t>(config.query_head));

    std::uniform_int_distribution<std::size_t> length(config.min_length, config.max_length);
    std::bernoulli_distribution from_topic(config.topic_concentration);

    struct Draft {
        std::string text;
        std::size_t owner;  ///< query index, or num_queries for noise
    };
    std::vector<Draft> drafts;
    std::vector<std::string> query_text(config.num_queries);

    for (std::size_t q = 0; q < config.num_queries; ++q) {
        const std::size_t start = q * config.topic_stride;
        auto topic_word = [&](std::size_t pos) { return words[topic_order[start + pos]]; };

        // Distinct head words, drawn by topic weight.
        std::vector<double> remaining = head_weights;
        std::vector<std::string> qtokens;
        for (std::size_t k = 0; k < std::min(config.query_length, config.query_head); ++k) {
            std::discrete_distribution<std::size_t> pick(remaining.begin(), remaining.end());
            std::size_t pos = pick(rng);
            remaining[pos] = 0.0;
            qtokens.push_back(topic_word(pos));
        }
        query_text[q] = fmt::format("{}", fmt::join(qtokens, " "));

        for (std::size_t r = 0; r < config.relevant_per_query; ++r) {
            std::vector<std::string> tokens(length(rng));
            for (auto& t : tokens) {
                t = from_topic(rng) ? topic_word(topic_pick(rng)) : words[bg_order[background(rng)]];
            }
            drafts.push_back(Draft{fmt::format("{}", fmt::join(tokens, " ")), q});
        }
    }
    for (std::size_t n = 0; n < config.noise_passages; ++n) {
        std::vector<std::string> tokens(length(rng));
        for (auto& t : tokens) {
            t = words[bg_order[background(rng)]];
        }
        drafts.push_back(Draft{fmt::format("{}", fmt::join(tokens, " ")), config.num_queries});
    }
    std::shuffle(drafts.begin(), drafts.end(), rng);

    SyntheticData data;
    std::vector<Passage> passages;
    passages.reserve(drafts.size());
    const int id_width = static_cast<int>(std::to_string(drafts.size()).size());
    const int q_width = static_cast<int>(std::to_string(config.num_queries).size());
    auto qid = [&](std::size_t q) { return fmt::format("q{:0{}d}", q + 1, q_width); };
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        Passage p;
        p.passage_id = fmt::format("p{:0{}d}", i, id_width);
        p.doc_id = fmt::format("d{:0{}d}", i, id_width);
        p.text = std::move(drafts[i].text);
        p.tokens = tokenize(p.text, tokenizer);
        if (drafts[i].owner < config.num_queries) {
            data.qrels.set(qid(drafts[i].owner), p.passage_id, 1);
        }
        passages.push_back(std::move(p));
    }
    data.collection = PassageCollection(std::move(passages));
    for (std::size_t q = 0; q < config.num_queries; ++q) {
        data.queries.push_back(Query{qid(q), query_text[q], tokenize(query_text[q], tokenizer)});
    }
    return data;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) {
            throw InputError("cannot write " + (dir / name).string());
        }
        return out;
    };
    auto corpus = open("corpus.jsonl");
    write_corpus(corpus, data.collection);
    auto queries = open("queries.tsv");
    write_queries(queries, data.queries);
    auto qrels = open("qrels.txt");
    write_qrels(qrels, data.qrels);
}

}  // namespace irf
