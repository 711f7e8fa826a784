#include "irf/simulation.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "irf/error.hpp"
#include "irf/log.hpp"
#include "parallel.hpp"

namespace irf {

Method parse_method(std::string_view name) {
    if (name == "ql") return Method::ql;
    if (name == "bm25") return Method::bm25;
    if (name == "rm3") return Method::rm3;
    if (name == "distillation" || name == "distill") return Method::distillation;
    if (name == "rocchio") return Method::rocchio;
    if (name == "erm") return Method::erm;
    throw std::invalid_argument("unknown method: " + std::string(name));
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::ql: return "ql";
        case Method::bm25: return "bm25";
        case Method::rm3: return "rm3";
        case Method::distillation: return "distillation";
        case Method::rocchio: return "rocchio";
        case Method::erm: return "erm";
    }
    return "ql";
}

Method base_method(Method m) {
    return m == Method::rocchio || m == Method::bm25 ? Method::bm25 : Method::ql;
}

void SessionConfig::validate() const {
    if (per_iter < 1) {
        throw std::invalid_argument("per_iter must be at least 1");
    }
    if (iterations < 1) {
        throw std::invalid_argument("iterations must be at least 1");
    }
    if (tail_depth < 1) {
        throw std::invalid_argument("tail_depth must be at least 1");
    }
    if (fusion) {
        fusion->validate();
    }
}

std::string SessionConfig::label() const {
    return fmt::format("{}x{}", per_iter, iterations);
}

std::vector<std::pair<std::size_t, std::size_t>> standard_settings() {
    return {{10, 1}, {5, 2}, {2, 5}, {1, 10}};
}

std::vector<PassageRef> FrozenRanking::list() const {
    std::vector<PassageRef> out(frozen_prefix);
    out.insert(out.end(), final_block.begin(), final_block.end());
    for (const auto& e : tail.entries) {
        out.push_back(e.passage);
    }
    return out;
}

std::vector<PassageRef> freeze_ranking(std::span<const IterationTrace> trace, const RankedList& tail) {
    std::vector<PassageRef> out;
    for (const auto& it : trace) {
        out.insert(out.end(), it.shown.begin(), it.shown.end());
    }
    for (const auto& e : tail.entries) {
        out.push_back(e.passage);
    }
    return out;
}

namespace {

/// The query model a session currently ranks with.
struct ModelState {
    Method method;
    QueryModel lm;                   ///< for the LM family
    std::optional<TermVector> vsm;   ///< Rocchio vector once feedback exists
    bool fed = false;                ///< re-estimated from judgments at least once
};

void require_engine(const Engine& engine, Method method, bool fusion) {
    if (engine.index == nullptr) {
        throw std::invalid_argument("engine has no index");
    }
    if ((method == Method::erm || fusion) && engine.semantic == nullptr) {
        throw std::invalid_argument("erm and fusion need an embedding model");
    }
}

ModelState initial_model(const Query& query, Method method) {
    if (query.tokens.empty()) {
        throw InputError("query " + query.query_id + " has no tokens after preprocessing");
    }
    ModelState s{method, {}, std::nullopt, false};
    if (base_method(method) == Method::ql) {
        s.lm = QueryModel::mle(query.tokens);
    }
    return s;
}

void reestimate(ModelState& s, const Query& query, const FeedbackState& state, const Engine& engine) {
    const auto& index = *engine.index;
    const auto& rp = state.relevant_pool;
    const auto& np = state.nonrelevant_pool;
    switch (s.method) {
        case Method::ql:
        case Method::bm25:
            return;
        case Method::rm3:
            if (!rp.empty()) {
                s.lm = estimate_rm3(query, rp, index, engine.feedback, engine.retrieval);
                s.fed = true;
            }
            return;
        case Method::distillation:
            if (!rp.empty()) {
                s.lm = estimate_distillation(query, rp, np, index, engine.feedback);
                s.fed = true;
            }
            return;
        case Method::erm:
            if (!rp.empty()) {
                s.lm = estimate_erm(query, rp, index, engine.semantic, engine.feedback, engine.erm, engine.retrieval);
                s.fed = true;
            }
            return;
        case Method::rocchio:
            if (!rp.empty() || !np.empty()) {
                auto v = rocchio_update(query_vector(query, index), rp, np, index, engine.feedback);
                bool any = std::any_of(v.weights.begin(), v.weights.end(), [](const auto& kv) { return kv.second > 0; });
                if (any) {
                    s.vsm = std::move(v);
                    s.fed = true;
                } else {
                    s.vsm.reset();
                }
            }
            return;
    }
}

RankedList rank_model(const ModelState& s, const Query& query, const Engine& engine, const FeedbackState& state,
                      const std::optional<FusionConfig>& fusion, std::size_t depth, const PassageSet& exclude) {
    const auto& index = *engine.index;
    RankedList list;
    if (base_method(s.method) == Method::ql) {
        list = rank_ql(s.lm, index, engine.retrieval, depth, exclude);
    } else if (s.vsm) {
        list = rank_rocchio(*s.vsm, index, depth, exclude);
    } else {
        list = rank_bm25(query, index, engine.retrieval, depth, exclude);
    }
    list.query_id = query.query_id;
    if (fusion && !state.relevant_pool.empty()) {
        list = fused_rank(list, state, *engine.semantic, *fusion, index);
    }
    return list;
}

nlohmann::ordered_json summarize(const ModelState& s, std::size_t terms = 10) {
    nlohmann::ordered_json j;
    j["method"] = std::string(to_string(s.method));
    if (base_method(s.method) == Method::ql) {
        j["weights"] = QueryModel::from_weights(top_terms(s.lm.weights(), terms)).to_json();
    } else if (s.vsm) {
        nlohmann::ordered_json w = nlohmann::ordered_json::object();
        for (const auto& [t, x] : top_terms(s.vsm->weights, terms)) {
            w[t] = x;
        }
        j["weights"] = w;
    } else {
        j["weights"] = "bm25";
    }
    return j;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

SessionResult run_irf_session(const Query& query, const Judgments& qrels, const SessionConfig& cfg,
                              const Engine& engine) {
    cfg.validate();
    require_engine(engine, cfg.method, cfg.fusion.has_value());
    const auto& index = *engine.index;
    SessionResult result;
    result.query_id = query.query_id;
    ModelState model = initial_model(query, cfg.method);
    const std::size_t depth = std::max(cfg.tail_depth, cfg.per_iter);

    for (std::size_t i = 0; i < cfg.iterations; ++i) {
        auto ranking = rank_model(model, query, engine, result.state, cfg.fusion, depth, result.state.shown);
        IterationTrace it;
        it.iteration = i;
        it.model = summarize(model);
        const std::size_t take = std::min(cfg.per_iter, ranking.entries.size());
        std::vector<Judged> judged;
        for (std::size_t k = 0; k < take; ++k) {
            const PassageRef ref = ranking.entries[k].passage;
            const bool rel = qrels.is_relevant(query.query_id, index.passage_id(ref));
            judged.push_back(Judged{ref, rel});
            it.shown.push_back(ref);
            it.relevant.push_back(rel);
        }
        if (!judged.empty()) {
            result.state = update_pools(std::move(result.state), judged);
            result.trace.push_back(std::move(it));
            reestimate(model, query, result.state, engine);
        }
        if (take < cfg.per_iter) {
            logger().warn("query {}: only {} unshown candidates left in iteration {}; session ends early",
                          query.query_id, take, i + 1);
            result.exhausted = true;
            break;
        }
    }

    auto& frozen = result.ranking;
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        auto& dst = i + 1 == result.trace.size() ? frozen.final_block : frozen.frozen_prefix;
        dst.insert(dst.end(), result.trace[i].shown.begin(), result.trace[i].shown.end());
    }
    if (result.state.shown.size() < index.passage_count()) {
        frozen.tail = rank_model(model, query, engine, result.state, cfg.fusion, cfg.tail_depth, result.state.shown);
    }
    frozen.tail.query_id = query.query_id;
    return result;
}

std::vector<SessionResult> run_sessions(std::span<const Query> queries, const Judgments& qrels,
                                        const SessionConfig& cfg, const Engine& engine, std::size_t threads) {
    std::vector<const Query*> judged;
    for (const auto& q : queries) {
        if (qrels.has_query(q.query_id)) {
            judged.push_back(&q);
        } else {
            logger().warn("query {} has no judgments; skipped", q.query_id);
        }
    }
    std::vector<SessionResult> out(judged.size());
    detail::parallel_for(judged.size(), threads,
                         [&](std::size_t i) { out[i] = run_irf_session(*judged[i], qrels, cfg, engine); });
    return out;
}

std::vector<OneRelTopic> run_one_rel_experiment(const Query& query, const Judgments& qrels, std::size_t draws,
                                                std::uint64_t seed, const Engine& engine, Method method,
                                                const std::optional<FusionConfig>& fusion, std::size_t depth) {
    require_engine(engine, method, fusion.has_value());
    if (fusion) {
        fusion->validate();
    }
    const auto& index = *engine.index;
    std::vector<PassageRef> relevant;
    for (const auto& pid : qrels.relevant(query.query_id)) {
        if (auto ref = index.find_passage(pid)) {
            relevant.push_back(*ref);
        }
    }
    if (relevant.size() < 2) {
        logger().warn("query {} has {} relevant passage(s) in the collection; one-rel experiment skipped",
                      query.query_id, relevant.size());
        return {};
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(query.query_id)),
                      static_cast<std::uint32_t>(fnv1a(query.query_id) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, relevant.size() - 1);

    std::vector<OneRelTopic> out;
    out.reserve(draws);
    for (std::size_t d = 0; d < draws; ++d) {
        const PassageRef fed = relevant[pick(rng)];
        const Judged j{fed, true};
        FeedbackState state = update_pools({}, std::span<const Judged>(&j, 1));
        ModelState model = initial_model(query, method);
        reestimate(model, query, state, engine);
        OneRelTopic topic;
        topic.topic_id = fmt::format("{}#{}", query.query_id, d);
        topic.query_id = query.query_id;
        topic.fed = fed;
        topic.ranking = rank_model(model, query, engine, state, fusion, depth, state.shown);
        topic.ranking.query_id = topic.topic_id;
        out.push_back(std::move(topic));
    }
    return out;
}

std::vector<OneRelTopic> run_one_rel_batch(std::span<const Query> queries, const Judgments& qrels,
                                           std::size_t draws, std::uint64_t seed, const Engine& engine,
                                           Method method, const std::optional<FusionConfig>& fusion,
                                           std::size_t depth, std::size_t threads) {
    std::vector<std::vector<OneRelTopic>> per_query(queries.size());
    detail::parallel_for(queries.size(), threads, [&](std::size_t i) {
        per_query[i] = run_one_rel_experiment(queries[i], qrels, draws, seed, engine, method, fusion, depth);
    });
    std::vector<OneRelTopic> out;
    for (auto& v : per_query) {
        std::move(v.begin(), v.end(), std::back_inserter(out));
    }
    return out;
}

Run to_run(std::span<const SessionResult> sessions, const Index& index) {
    Run run;
    for (const auto& s : sessions) {
        auto& ids = run[s.query_id];
        for (auto ref : s.ranking.list()) {
            ids.push_back(index.passage_id(ref));
        }
    }
    return run;
}

Run to_run(std::span<const OneRelTopic> topics, const Index& index) {
    Run run;
    for (const auto& t : topics) {
        auto& ids = run[t.topic_id];
        for (const auto& e : t.ranking.entries) {
            ids.push_back(index.passage_id(e.passage));
        }
    }
    return run;
}

void write_session_traces(std::ostream& out, std::span<const SessionResult> sessions, const Index& index) {
    for (const auto& s : sessions) {
        for (const auto& it : s.trace) {
            nlohmann::ordered_json j;
            j["query_id"] = s.query_id;
            j["iteration"] = it.iteration;
            auto shown = nlohmann::ordered_json::array();
            for (auto ref : it.shown) {
                shown.push_back(index.passage_id(ref));
            }
            j["shown"] = shown;
            j["relevant"] = it.relevant;
            j["model"] = it.model;
            out << j.dump() << '\n';
        }
    }
}

}  // namespace irf
