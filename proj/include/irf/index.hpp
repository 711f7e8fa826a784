#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "irf/corpus.hpp"
#include "irf/query_model.hpp"

namespace irf {

using TermId = std::uint32_t;

struct Posting {
    PassageRef passage;
    std::uint32_t tf;
    bool operator==(const Posting&) const = default;
};

struct TermCount {
    TermId term;
    std::uint32_t tf;
    bool operator==(const TermCount&) const = default;
};

/// Immutable inverted index with collection statistics. Term ids follow
/// lexicographic term order; postings are sorted by passage.
class Index {
  public:
    /// Throws InputError when the collection is empty.
    static Index build(const PassageCollection& collection);

    std::size_t passage_count() const { return passage_ids_.size(); }
    std::size_t term_count() const { return terms_.size(); }
    std::uint64_t total_tokens() const { return total_tokens_; }
    double average_length() const;

    std::optional<TermId> term_id(std::string_view term) const;
    const std::string& term(TermId id) const { return terms_[id]; }
    std::uint64_t collection_frequency(TermId id) const { return cf_[id]; }
    std::uint32_t document_frequency(TermId id) const { return df_[id]; }
    std::span<const Posting> postings(TermId id) const { return postings_[id]; }

    std::uint32_t doc_length(PassageRef ref) const { return doc_length_[ref]; }
    /// Term counts of one passage, sorted by term id.
    std::span<const TermCount> passage_terms(PassageRef ref) const { return forward_[ref]; }
    const std::string& passage_id(PassageRef ref) const { return passage_ids_[ref]; }
    std::optional<PassageRef> find_passage(std::string_view passage_id) const;
    /// Position of the passage id in ascending id order; the ranking tie-break key.
    std::uint32_t id_order(PassageRef ref) const { return id_order_[ref]; }

    /// cf(term) / total_tokens; zero for unseen terms.
    double collection_prob(std::string_view term) const;
    double collection_prob(TermId id) const;
    /// ln(N / df); zero when df is zero.
    double idf(TermId id) const;
    double idf(std::string_view term) const;

    /// Full scan of the postings/statistics invariants; throws std::logic_error on violation.
    void audit() const;

    void save(const std::filesystem::path& path) const;
    static Index load(const std::filesystem::path& path);
    void write(std::ostream& out) const;
    static Index read(std::istream& in, const std::string& source = "<index>");

    bool operator==(const Index& other) const;

  private:
    void finish();

    std::vector<std::string> passage_ids_;
    std::vector<std::uint32_t> doc_length_;
    std::vector<std::uint32_t> id_order_;
    std::unordered_map<std::string, PassageRef> passage_lookup_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, TermId> term_lookup_;
    std::vector<std::uint64_t> cf_;
    std::vector<std::uint32_t> df_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::vector<TermCount>> forward_;
    std::uint64_t total_tokens_ = 0;
};

/// tf(w, passage) * ln(N / df(w)); terms with df = 0 are omitted.
TermVector tfidf_vector(const Passage& passage, const Index& index);
TermVector tfidf_vector(PassageRef ref, const Index& index);

/// Free-function form of Index::collection_prob.
double collection_prob(const Index& index, std::string_view term);

}  // namespace irf
