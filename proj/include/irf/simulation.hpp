#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "irf/corpus.hpp"
#include "irf/feedback.hpp"
#include "irf/fusion.hpp"
#include "irf/index.hpp"
#include "irf/retrieval.hpp"

namespace irf {

/// Ranking method. ql and bm25 are the no-feedback baselines; the LM
/// feedback methods start from ql and rocchio starts from bm25.
enum class Method { ql, bm25, rm3, distillation, rocchio, erm };

Method parse_method(std::string_view name);
std::string_view to_string(Method m);
/// ql for the language-model methods, bm25 for rocchio.
Method base_method(Method m);

/// Everything a session needs besides the query and the judgments.
struct Engine {
    const Index* index = nullptr;
    RetrievalParams retrieval;
    FeedbackParams feedback;
    ErmParams erm;
    const SemanticContext* semantic = nullptr;  ///< required by erm and fusion
};

struct SessionConfig {
    std::size_t per_iter = 10;    ///< N, results judged per iteration
    std::size_t iterations = 1;
    Method method = Method::rm3;
    std::optional<FusionConfig> fusion;
    std::size_t tail_depth = 100;  ///< unshown candidates ranked after the last iteration

    std::size_t budget() const { return per_iter * iterations; }
    void validate() const;
    /// "10x1" style label: N x iterations.
    std::string label() const;
};

/// The (N, iterations) pairs {10x1, 5x2, 2x5, 1x10} sharing a budget of 10.
std::vector<std::pair<std::size_t, std::size_t>> standard_settings();

struct IterationTrace {
    std::size_t iteration = 0;
    std::vector<PassageRef> shown;
    std::vector<bool> relevant;
    nlohmann::ordered_json model;  ///< summary of the model that produced `shown`
};

/// Final evaluated list: frozen_prefix, then final_block, then tail.
struct FrozenRanking {
    std::vector<PassageRef> frozen_prefix;  ///< blocks of all but the last iteration
    std::vector<PassageRef> final_block;    ///< results shown in the last iteration
    RankedList tail;                        ///< final model over unshown candidates

    std::vector<PassageRef> list() const;
};

struct SessionResult {
    std::string query_id;
    FrozenRanking ranking;
    std::vector<IterationTrace> trace;
    FeedbackState state;
    bool exhausted = false;  ///< ran out of candidates before the last iteration
};

/// Shown blocks in presentation order followed by `tail`; the first result
/// of iteration i lands at rank iN+1.
std::vector<PassageRef> freeze_ranking(std::span<const IterationTrace> trace, const RankedList& tail);

/// Simulated iterative feedback for one query: each iteration shows the top N
/// unshown results of the current model, judges them from `qrels`, and
/// re-estimates the model from the accumulated pools.
SessionResult run_irf_session(const Query& query, const Judgments& qrels, const SessionConfig& cfg,
                              const Engine& engine);

/// Sessions for every query that has judgments, `threads` at a time.
std::vector<SessionResult> run_sessions(std::span<const Query> queries, const Judgments& qrels,
                                        const SessionConfig& cfg, const Engine& engine, std::size_t threads = 1);

struct OneRelTopic {
    std::string topic_id;  ///< "<query_id>#<draw>"
    std::string query_id;
    PassageRef fed = 0;
    RankedList ranking;
};

/// `draws` times: pick one relevant passage uniformly (with replacement),
/// use it as the only feedback and rank the remaining passages. Queries
/// with fewer than two relevant passages are skipped with a warning.
std::vector<OneRelTopic> run_one_rel_experiment(const Query& query, const Judgments& qrels, std::size_t draws,
                                                std::uint64_t seed, const Engine& engine, Method method,
                                                const std::optional<FusionConfig>& fusion = std::nullopt,
                                                std::size_t depth = 100);

std::vector<OneRelTopic> run_one_rel_batch(std::span<const Query> queries, const Judgments& qrels,
                                           std::size_t draws, std::uint64_t seed, const Engine& engine,
                                           Method method, const std::optional<FusionConfig>& fusion = std::nullopt,
                                           std::size_t depth = 100, std::size_t threads = 1);

/// Per-query ordered passage ids of the frozen lists.
Run to_run(std::span<const SessionResult> sessions, const Index& index);
Run to_run(std::span<const OneRelTopic> topics, const Index& index);

/// One JSON object per iteration: query_id, iteration, shown, relevant, model.
void write_session_traces(std::ostream& out, std::span<const SessionResult> sessions, const Index& index);

}  // namespace irf
