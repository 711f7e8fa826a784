#include "irf/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "irf/log.hpp"

namespace irf {

FeedbackState update_pools(FeedbackState state, std::span<const Judged> judged) {
    std::unordered_set<PassageRef> batch;
    for (const auto& j : judged) {
        if (state.shown.contains(j.passage)) {
            throw std::invalid_argument("passage " + std::to_string(j.passage) + " was already judged");
        }
        if (!batch.insert(j.passage).second) {
            throw std::invalid_argument("passage " + std::to_string(j.passage) + " judged twice in one batch");
        }
    }
    for (const auto& j : judged) {
        (j.relevant ? state.relevant_pool : state.nonrelevant_pool).push_back(j.passage);
        state.shown.insert(j.passage);
        state.shown_order.push_back(j.passage);
    }
    ++state.iteration;
    return state;
}

void FeedbackParams::validate() const {
    auto unit = [](double x, const char* name) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
        }
    };
    unit(alpha_interp, "alpha_interp");
    unit(lambda_mix, "lambda_mix");
    unit(lambda_nr, "lambda_nr");
    if (rocchio_alpha < 0.0 || rocchio_beta < 0.0 || rocchio_gamma < 0.0) {
        throw std::invalid_argument("Rocchio weights must be nonnegative");
    }
    if (em_max_iters < 1) {
        throw std::invalid_argument("em_max_iters must be at least 1");
    }
    if (!(em_tol >= 0.0)) {
        throw std::invalid_argument("em_tol must be nonnegative");
    }
}

void ErmParams::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("ERM lambda must lie in [0, 1]");
    }
    if (k < 1) {
        throw std::invalid_argument("ERM neighbour count must be at least 1");
    }
}

namespace {

std::uint32_t term_frequency(const Index& index, PassageRef ref, TermId id) {
    auto terms = index.passage_terms(ref);
    auto it = std::lower_bound(terms.begin(), terms.end(), id,
                               [](const TermCount& tc, TermId t) { return tc.term < t; });
    return it != terms.end() && it->term == id ? it->tf : 0;
}

/// ln P(Q|D) under Dirichlet smoothing, skipping terms unseen in the collection.
std::vector<double> exact_log_likelihood(const Query& query, std::span<const PassageRef> pool, const Index& index,
                                         double mu) {
    std::vector<std::pair<TermId, double>> terms;
    for (const auto& t : query.tokens) {
        auto id = index.term_id(t);
        if (id && index.collection_frequency(*id) > 0) {
            terms.emplace_back(*id, mu * index.collection_prob(*id));
        }
    }
    std::vector<double> out(pool.size(), 0.0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double denom = std::log(index.doc_length(pool[i]) + mu);
        for (const auto& [id, smoothed] : terms) {
            out[i] += std::log(term_frequency(index, pool[i], id) + smoothed) - denom;
        }
    }
    return out;
}

/// Normalizes log weights over the pool; uniform when every weight is -inf.
std::vector<double> normalize_log_weights(std::span<const double> logw) {
    const double top = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(logw.size());
    if (!std::isfinite(top)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(logw[i] - top);
        sum += w[i];
    }
    for (auto& x : w) {
        x /= sum;
    }
    return w;
}

TermWeights weighted_relevance_model(std::span<const PassageRef> pool, std::span<const double> doc_weight,
                                     const Index& index, std::size_t m) {
    std::unordered_map<TermId, double> acc;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double len = index.doc_length(pool[i]);
        if (len == 0.0) {
            continue;
        }
        for (const auto& tc : index.passage_terms(pool[i])) {
            acc[tc.term] += doc_weight[i] * tc.tf / len;
        }
    }
    TermWeights rm;
    for (const auto& [id, w] : acc) {
        if (w > 0.0) {
            rm.emplace(index.term(id), w);
        }
    }
    rm = top_terms(rm, m);
    double sum = 0.0;
    for (const auto& [_, w] : rm) {
        sum += w;
    }
    for (auto& [_, w] : rm) {
        w /= sum;
    }
    return rm;
}

QueryModel interpolate(const Query& query, const TermWeights& feedback, double alpha) {
    auto mle = QueryModel::mle(query.tokens);
    if (feedback.empty()) {
        logger().warn("query {}: feedback model is empty; keeping the original query", query.query_id);
        return mle;
    }
    TermWeights mixed;
    for (const auto& [term, w] : mle) {
        mixed[term] += alpha * w;
    }
    for (const auto& [term, w] : feedback) {
        mixed[term] += (1.0 - alpha) * w;
    }
    return QueryModel::from_weights(std::move(mixed));
}

void require_pool(std::span<const PassageRef> pool) {
    if (pool.empty()) {
        throw std::invalid_argument("feedback estimation needs a nonempty relevant pool");
    }
}

double log_add(double x, double y) {
    if (x == -std::numeric_limits<double>::infinity()) {
        return y;
    }
    if (y == -std::numeric_limits<double>::infinity()) {
        return x;
    }
    const double hi = std::max(x, y);
    return hi + std::log1p(std::exp(std::min(x, y) - hi));
}

}  // namespace

TermWeights relevance_model(const Query& query, std::span<const PassageRef> rel_pool, const Index& index,
                            std::size_t m, const RetrievalParams& retrieval) {
    require_pool(rel_pool);
    auto logw = exact_log_likelihood(query, rel_pool, index, retrieval.mu);
    auto w = normalize_log_weights(logw);
    return weighted_relevance_model(rel_pool, w, index, m);
}

QueryModel estimate_rm3(const Query& query, std::span<const PassageRef> rel_pool, const Index& index,
                        const FeedbackParams& params, const RetrievalParams& retrieval) {
    params.validate();
    auto rm = relevance_model(query, rel_pool, index, params.m, retrieval);
    return interpolate(query, rm, params.alpha_interp);
}

EmResult mixture_em(std::span<const double> counts, std::span<const double> background,
                    std::span<const double> nonrel, double lambda_mix, double lambda_nr, std::size_t max_iters,
                    double tol) {
    const std::size_t n = counts.size();
    if (background.size() != n || nonrel.size() != n) {
        throw std::invalid_argument("mixture components must cover the same words");
    }
    if (lambda_mix + lambda_nr >= 1.0) {
        throw std::invalid_argument("lambda_mix + lambda_nr must be below 1");
    }
    const double topic = 1.0 - lambda_mix - lambda_nr;
    EmResult r;
    r.theta.assign(n, 0.0);
    std::size_t support = 0;
    for (double c : counts) {
        support += c > 0.0 ? 1 : 0;
    }
    if (support == 0) {
        throw std::invalid_argument("mixture EM needs at least one observed word");
    }
    for (std::size_t i = 0; i < n; ++i) {
        r.theta[i] = counts[i] > 0.0 ? 1.0 / static_cast<double>(support) : 0.0;
    }
    auto log_likelihood = [&](const std::vector<double>& theta) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[i] > 0.0) {
                ll += counts[i] * std::log(topic * theta[i] + lambda_mix * background[i] + lambda_nr * nonrel[i]);
            }
        }
        return ll;
    };
    r.log_likelihood.push_back(log_likelihood(r.theta));
    std::vector<double> next(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = 0.0;
            if (counts[i] <= 0.0) {
                continue;
            }
            const double own = topic * r.theta[i];
            const double p = own + lambda_mix * background[i] + lambda_nr * nonrel[i];
            next[i] = p > 0.0 ? counts[i] * own / p : 0.0;
            total += next[i];
        }
        if (total <= 0.0) {
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            r.theta[i] = next[i] / total;
        }
        ++r.iterations;
        const double ll = log_likelihood(r.theta);
        const double gain = ll - r.log_likelihood.back();
        r.log_likelihood.push_back(ll);
        if (gain < -1e-9) {
            throw std::logic_error("mixture EM log-likelihood decreased");
        }
        if (gain < tol) {
            break;
        }
    }
    return r;
}

QueryModel estimate_distillation(const Query& query, std::span<const PassageRef> rel_pool,
                                 std::span<const PassageRef> nr_pool, const Index& index,
                                 const FeedbackParams& params) {
    params.validate();
    if (params.lambda_mix + params.lambda_nr >= 1.0) {
        throw std::invalid_argument("lambda_mix + lambda_nr must be below 1");
    }
    require_pool(rel_pool);
    double lambda_nr = params.lambda_nr;
    if (lambda_nr > 0.0 && nr_pool.empty()) {
        logger().debug("query {}: no non-relevant feedback yet; non-relevant component disabled", query.query_id);
        lambda_nr = 0.0;
    }

    std::map<TermId, double> rel_counts;
    for (auto ref : rel_pool) {
        for (const auto& tc : index.passage_terms(ref)) {
            rel_counts[tc.term] += tc.tf;
        }
    }
    if (rel_counts.empty()) {
        logger().warn("query {}: relevant passages are empty; keeping the original query", query.query_id);
        return QueryModel::mle(query.tokens);
    }
    std::unordered_map<TermId, double> nr_counts;
    double nr_total = 0.0;
    for (auto ref : nr_pool) {
        for (const auto& tc : index.passage_terms(ref)) {
            nr_counts[tc.term] += tc.tf;
            nr_total += tc.tf;
        }
    }

    std::vector<TermId> ids;
    std::vector<double> counts, background, nonrel;
    for (const auto& [id, c] : rel_counts) {
        ids.push_back(id);
        counts.push_back(c);
        background.push_back(index.collection_prob(id));
        auto it = nr_counts.find(id);
        nonrel.push_back(it == nr_counts.end() || nr_total == 0.0 ? 0.0 : it->second / nr_total);
    }
    auto em = mixture_em(counts, background, nonrel, params.lambda_mix, lambda_nr, params.em_max_iters,
                         params.em_tol);

    TermWeights topic;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (em.theta[i] > 0.0) {
            topic.emplace(index.term(ids[i]), em.theta[i]);
        }
    }
    topic = top_terms(topic, params.m);
    double sum = 0.0;
    for (const auto& [_, w] : topic) {
        sum += w;
    }
    for (auto& [_, w] : topic) {
        w /= sum;
    }
    return interpolate(query, topic, params.alpha_interp);
}

TermVector query_vector(const Query& query, const Index& index) {
    Passage p;
    p.tokens = query.tokens;
    return tfidf_vector(p, index);
}

TermVector rocchio_update(const TermVector& query_vec, std::span<const PassageRef> rel_pool,
                          std::span<const PassageRef> nr_pool, const Index& index, const FeedbackParams& params) {
    params.validate();
    TermWeights w;
    for (const auto& [term, x] : query_vec.weights) {
        w[term] += params.rocchio_alpha * x;
    }
    auto add_centroid = [&](std::span<const PassageRef> pool, double coef) {
        if (pool.empty() || coef == 0.0) {
            return;
        }
        const double scale = coef / static_cast<double>(pool.size());
        for (auto ref : pool) {
            for (const auto& tc : index.passage_terms(ref)) {
                w[index.term(tc.term)] += scale * tc.tf * index.idf(tc.term);
            }
        }
    };
    add_centroid(rel_pool, params.rocchio_beta);
    add_centroid(nr_pool, -params.rocchio_gamma);

    TermVector out;
    TermWeights expansion;
    for (auto& [term, x] : w) {
        const double clipped = std::max(0.0, x);
        if (query_vec.weights.contains(term)) {
            out.weights.emplace(term, clipped);
        } else if (clipped > 0.0) {
            expansion.emplace(term, clipped);
        }
    }
    for (auto& [term, x] : top_terms(expansion, params.m)) {
        out.weights.emplace(term, x);
    }
    return out;
}

std::vector<std::pair<std::uint32_t, double>> translation_probabilities(const EmbeddingModel& model,
                                                                        std::uint32_t word, const ErmParams& erm) {
    auto neighbours = model.nearest(word, erm.k);
    double sum = 0.0;
    for (auto& [w, cos] : neighbours) {
        cos = sgns::sigmoid(erm.a * (cos - erm.c));
        sum += cos;
    }
    for (auto& [w, t] : neighbours) {
        t /= sum;
    }
    return neighbours;
}

QueryModel estimate_erm(const Query& query, std::span<const PassageRef> rel_pool, const Index& index,
                        const SemanticContext* semantic, const FeedbackParams& params, const ErmParams& erm,
                        const RetrievalParams& retrieval) {
    if (semantic == nullptr) {
        throw std::invalid_argument("ERM needs an embedding model");
    }
    params.validate();
    erm.validate();
    require_pool(rel_pool);

    auto exact = exact_log_likelihood(query, rel_pool, index, retrieval.mu);
    std::vector<double> logw = exact;
    if (erm.lambda < 1.0) {
        const auto& model = semantic->model();
        const auto& eindex = semantic->index();
        // Per query word: (embedding-index term, T(q|w)) over its neighbours.
        std::vector<std::vector<std::pair<TermId, double>>> translations;
        std::vector<std::string> missing;
        for (const auto& q : semantic->query_tokens(query)) {
            auto word = model.word_index(q);
            if (!word) {
                missing.push_back(q);
                continue;
            }
            std::vector<std::pair<TermId, double>> row;
            for (const auto& [w, t] : translation_probabilities(model, *word, erm)) {
                if (auto id = eindex.term_id(model.words()[w])) {
                    row.emplace_back(*id, t);
                }
            }
            translations.push_back(std::move(row));
        }
        if (!missing.empty()) {
            logger().warn("query {}: {} term(s) outside the embedding vocabulary skipped", query.query_id,
                          missing.size());
        }
        if (translations.empty()) {
            logger().warn("query {}: no query term has an embedding; using exact match only", query.query_id);
        } else {
            for (std::size_t i = 0; i < rel_pool.size(); ++i) {
                const double len = eindex.doc_length(rel_pool[i]);
                double translated = 0.0;
                for (const auto& row : translations) {
                    double p = 0.0;
                    if (len > 0.0) {
                        for (const auto& [id, t] : row) {
                            p += t * term_frequency(eindex, rel_pool[i], id) / len;
                        }
                    }
                    translated += std::log(p);
                }
                if (erm.lambda == 0.0) {
                    logw[i] = translated;
                } else {
                    logw[i] = log_add(std::log(erm.lambda) + exact[i], std::log1p(-erm.lambda) + translated);
                }
            }
        }
    }
    auto w = normalize_log_weights(logw);
    auto rm = weighted_relevance_model(rel_pool, w, index, params.m);
    return interpolate(query, rm, params.alpha_interp);
}

}  // namespace irf
