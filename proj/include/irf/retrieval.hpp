#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "irf/corpus.hpp"
#include "irf/index.hpp"
#include "irf/query_model.hpp"

namespace irf {

struct RetrievalParams {
    double mu = 300.0;  ///< Dirichlet prior
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

struct ScoredPassage {
    PassageRef passage;
    double score;
    bool operator==(const ScoredPassage&) const = default;
};

/// Descending by score; equal scores ordered by passage id ascending.
struct RankedList {
    std::string query_id;
    std::vector<ScoredPassage> entries;

    std::size_t size() const { return entries.size(); }
    std::vector<PassageRef> passages() const;
};

using PassageSet = std::unordered_set<PassageRef>;

/// Picks the `depth` best-scoring passages not in `exclude` from a dense
/// per-passage score array (indexed by PassageRef).
RankedList select_top(std::span<const double> scores, const Index& index, std::size_t depth,
                      const PassageSet& exclude);

/// Re-sorts entries in place with the ranking order and tie-break.
void sort_ranked(std::vector<ScoredPassage>& entries, const Index& index);

/// Query-likelihood / KL-divergence ranking with Dirichlet smoothing:
/// sum_w P(w|Q) ln((tf(w,d) + mu p(w|C)) / (|d| + mu)). Terms absent from
/// the collection are skipped with a warning. Throws std::invalid_argument on
/// an empty model or depth 0.
RankedList rank_ql(const QueryModel& query_model, const Index& index, const RetrievalParams& params,
                   std::size_t depth, const PassageSet& exclude = {});

/// Okapi BM25 with idf clamped at zero. Each query token contributes
/// separately, so repeated tokens count twice.
RankedList rank_bm25(const Query& query, const Index& index, const RetrievalParams& params, std::size_t depth,
                     const PassageSet& exclude = {});

/// Dot product between `query_vec` and each passage's tf-idf vector.
RankedList rank_rocchio(const TermVector& query_vec, const Index& index, std::size_t depth,
                        const PassageSet& exclude = {});

/// Dense score arrays behind the rankers, one entry per passage.
std::vector<double> score_ql(const QueryModel& query_model, const Index& index, const RetrievalParams& params);
std::vector<double> score_bm25(const Query& query, const Index& index, const RetrievalParams& params);
std::vector<double> score_rocchio(const TermVector& query_vec, const Index& index);

/// Per-query ordered passage ids, as read back from a TREC run file.
using Run = std::map<std::string, std::vector<std::string>, std::less<>>;

/// "qid Q0 pid rank score tag", ranks from 1.
void write_trec_run(std::ostream& out, const RankedList& list, const Index& index, std::string_view tag);
/// Writes an already-ordered list with strictly decreasing synthetic scores.
void write_trec_run(std::ostream& out, std::string_view query_id, std::span<const std::string> passage_ids,
                    std::string_view tag);
/// Orders each query's entries by score descending, then by rank ascending.
Run read_trec_run(std::istream& in, const std::string& source = "<run>");
Run load_trec_run(const std::filesystem::path& path);

}  // namespace irf
