#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "irf/text.hpp"

namespace irf {

/// Position of a passage inside its PassageCollection (and Index).
using PassageRef = std::uint32_t;

struct Passage {
    std::string passage_id;
    std::string doc_id;
    std::string text;
    std::vector<std::string> tokens;
};

struct Query {
    std::string query_id;
    std::string text;
    std::vector<std::string> tokens;
};

/// Relevance grades keyed by query id then passage id. A grade above zero
/// is relevant under the binary view.
class Judgments {
  public:
    void set(const std::string& query_id, const std::string& passage_id, int grade);

    std::optional<int> grade(std::string_view query_id, std::string_view passage_id) const;
    bool is_relevant(std::string_view query_id, std::string_view passage_id) const;
    bool has_query(std::string_view query_id) const;

    /// Passage ids with grade > 0, sorted.
    std::vector<std::string> relevant(std::string_view query_id) const;
    std::vector<std::string> query_ids() const;
    std::size_t size() const;

    const std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>>& entries() const {
        return grades_;
    }

  private:
    std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>> grades_;
};

/// Immutable, id-unique set of tokenized passages.
class PassageCollection {
  public:
    PassageCollection() = default;
    /// Throws InputError on duplicate passage ids.
    explicit PassageCollection(std::vector<Passage> passages);

    std::size_t size() const { return passages_.size(); }
    bool empty() const { return passages_.empty(); }
    const Passage& operator[](PassageRef ref) const { return passages_[ref]; }
    const std::vector<Passage>& passages() const { return passages_; }
    std::optional<PassageRef> find(std::string_view passage_id) const;

    /// Distinct tokens, sorted.
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

    /// Same passages and order, re-tokenized from their text.
    PassageCollection retokenized(const TokenizerConfig& config) const;

  private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, PassageRef> by_id_;
    std::vector<std::string> vocabulary_;
};

/// Corpus: JSON lines with string fields "id", "doc_id", "text".
PassageCollection parse_corpus(std::istream& in, const TokenizerConfig& config,
                               const std::string& source = "<corpus>");
PassageCollection ingest_corpus(const std::filesystem::path& path, const TokenizerConfig& config);
void write_corpus(std::ostream& out, const PassageCollection& collection);
void write_corpus(const std::filesystem::path& path, const PassageCollection& collection);

/// Queries: "qid<TAB>text" per line; blank lines ignored.
std::vector<Query> parse_queries(std::istream& in, const TokenizerConfig& config,
                                 const std::string& source = "<queries>");
std::vector<Query> load_queries(const std::filesystem::path& path, const TokenizerConfig& config);
void write_queries(std::ostream& out, const std::vector<Query>& queries);

/// Qrels: TREC four-column "qid iter pid grade". A repeated (qid, pid)
/// keeps the last grade and logs a warning.
Judgments parse_qrels(std::istream& in, const std::string& source = "<qrels>");
Judgments load_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const Judgments& qrels);

/// Sentences end at '.', '?' or '!' followed by whitespace (or end of text).
std::vector<std::string> split_sentences(std::string_view text);

/// Cuts a document into contiguous, non-overlapping windows of 2 or 3
/// sentences (each length drawn with equal probability from the seeded
/// generator). The last window keeps whatever remains. Passage ids are
/// "<doc_id>-<n>"; tokens are left empty.
std::vector<Passage> segment_document(std::string_view doc_text, std::uint64_t seed,
                                      const std::string& doc_id = "doc");

}  // namespace irf
