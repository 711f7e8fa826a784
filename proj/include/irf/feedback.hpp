#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "irf/corpus.hpp"
#include "irf/embeddings.hpp"
#include "irf/index.hpp"
#include "irf/query_model.hpp"
#include "irf/retrieval.hpp"

namespace irf {

/// Judgment pools accumulated over one feedback session.
struct FeedbackState {
    std::vector<PassageRef> relevant_pool;
    std::vector<PassageRef> nonrelevant_pool;
    PassageSet shown;
    std::vector<PassageRef> shown_order;  ///< presentation order
    std::size_t iteration = 0;
};

struct Judged {
    PassageRef passage;
    bool relevant;
};

/// Adds one iteration of judgments. Throws std::invalid_argument when a
/// passage was already shown or appears twice in `judged`.
FeedbackState update_pools(FeedbackState state, std::span<const Judged> judged);

struct FeedbackParams {
    std::size_t m = 20;          ///< expansion terms
    double alpha_interp = 0.5;   ///< weight of the original query
    double lambda_mix = 0.5;     ///< corpus component of the mixture
    double lambda_nr = 0.2;      ///< non-relevant component of the mixture
    double rocchio_alpha = 1.0;
    double rocchio_beta = 0.75;
    double rocchio_gamma = 0.15;
    std::size_t em_max_iters = 50;
    double em_tol = 1e-6;

    void validate() const;
};

struct ErmParams {
    double lambda = 0.5;  ///< weight of exact match
    std::size_t k = 10;   ///< translation neighbours per query term
    double a = 10.0;      ///< sigmoid slope
    double c = 0.5;       ///< sigmoid offset

    void validate() const;
};

/// P(w|R) before interpolation: sum over the pool of P_ml(w|D) weighted by
/// P(Q|D) (normalized over the pool), truncated to `m` terms and renormalized.
TermWeights relevance_model(const Query& query, std::span<const PassageRef> rel_pool, const Index& index,
                            std::size_t m, const RetrievalParams& retrieval = {});

/// RM3: alpha_interp * MLE(query) + (1 - alpha_interp) * P(w|R). Throws
/// std::invalid_argument on an empty pool.
QueryModel estimate_rm3(const Query& query, std::span<const PassageRef> rel_pool, const Index& index,
                        const FeedbackParams& params, const RetrievalParams& retrieval = {});

struct EmResult {
    std::vector<double> theta;
    /// Log-likelihood at the initial point and after every iteration.
    std::vector<double> log_likelihood;
    std::size_t iterations = 0;
};

/// EM for the topic component of
/// P(w) = (1 - lm - ln) theta(w) + lm background(w) + ln nonrel(w),
/// starting from uniform theta over the words with positive count. Stops when
/// an iteration gains less than `tol` or after `max_iters` iterations.
/// Throws std::logic_error if the likelihood drops by more than 1e-9.
EmResult mixture_em(std::span<const double> counts, std::span<const double> background,
                    std::span<const double> nonrel, double lambda_mix, double lambda_nr, std::size_t max_iters,
                    double tol);

/// Distillation: a feedback topic estimated against the corpus model and a
/// query-specific non-relevant model (MLE of the non-relevant pool), then
/// truncated and interpolated like RM3. Throws std::invalid_argument when
/// lambda_mix + lambda_nr >= 1 or the relevant pool is empty.
QueryModel estimate_distillation(const Query& query, std::span<const PassageRef> rel_pool,
                                 std::span<const PassageRef> nr_pool, const Index& index,
                                 const FeedbackParams& params);

/// tf-idf vector of the query tokens.
TermVector query_vector(const Query& query, const Index& index);

/// q' = alpha q + beta centroid(R) - gamma centroid(NR), negatives clipped to
/// zero; keeps the terms of `query_vec` plus the `m` heaviest other terms.
TermVector rocchio_update(const TermVector& query_vec, std::span<const PassageRef> rel_pool,
                          std::span<const PassageRef> nr_pool, const Index& index, const FeedbackParams& params);

/// Translation probabilities T(q|w) for one query word over its `k` nearest
/// vocabulary neighbours (the word itself included): sigmoid_{a,c}(cos)
/// normalized over the neighbour set. Pairs are (vocabulary index, T).
std::vector<std::pair<std::uint32_t, double>> translation_probabilities(const EmbeddingModel& model,
                                                                        std::uint32_t word, const ErmParams& erm);

/// RM3 with P(Q|D) replaced by
/// lambda P_exact(Q|D) + (1 - lambda) prod_q sum_w T(q|w) P_ml(w|D).
/// Translation uses the embedding tokenization held by `semantic`. Throws
/// std::invalid_argument when `semantic` is null or the pool is empty.
QueryModel estimate_erm(const Query& query, std::span<const PassageRef> rel_pool, const Index& index,
                        const SemanticContext* semantic, const FeedbackParams& params, const ErmParams& erm,
                        const RetrievalParams& retrieval = {});

}  // namespace irf
