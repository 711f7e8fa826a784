#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "irf/corpus.hpp"

namespace irf {

/// Planted-topic corpus: each query owns a slice of the vocabulary; its
/// relevant passages mix that topic with the background, noise passages
/// use the background only.
struct GeneratorConfig {
    std::size_t num_queries = 50;
    std::size_t relevant_per_query = 10;
    std::size_t noise_passages = 1500;
    std::size_t vocab_size = 500;
    double topic_concentration = 0.6;  ///< share of relevant-passage tokens drawn from the topic
    std::size_t min_length = 20;
    std::size_t max_length = 40;
    std::size_t topic_size = 30;       ///< words per topic slice
    std::size_t topic_stride = 9;      ///< offset between consecutive slices (overlap when < topic_size)
    std::size_t query_length = 2;
    std::size_t query_head = 10;       ///< query words come from this many leading topic words
    double zipf_exponent = 1.0;        ///< background skew
    double topic_skew = 0.5;           ///< skew of the within-topic distribution
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument on zero counts, bad ranges or a
    /// vocabulary too small for the requested topics.
    void validate() const;
    nlohmann::ordered_json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
};

struct SyntheticData {
    PassageCollection collection;
    std::vector<Query> queries;
    Judgments qrels;
};

/// Deterministic given config.seed. Passage ids are assigned after a shuffle
/// so they carry no information about relevance.
SyntheticData generate(const GeneratorConfig& config, const TokenizerConfig& tokenizer = TokenizerConfig::retrieval_default());

/// Writes corpus.jsonl, queries.tsv and qrels.txt into `dir`.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace irf
