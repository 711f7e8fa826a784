#include "irf/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "irf/error.hpp"
#include "irf/log.hpp"

namespace irf {

void RetrievalParams::validate() const {
    if (!(mu > 0.0)) {
        throw std::invalid_argument("mu must be positive");
    }
    if (!(k1 > 0.0)) {
        throw std::invalid_argument("k1 must be positive");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw std::invalid_argument("b must lie in [0, 1]");
    }
}

std::vector<PassageRef> RankedList::passages() const {
    std::vector<PassageRef> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        out.push_back(e.passage);
    }
    return out;
}

namespace {

auto ranking_order(const Index& index) {
    return [&index](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return index.id_order(a.passage) < index.id_order(b.passage);
    };
}

}  // namespace

void sort_ranked(std::vector<ScoredPassage>& entries, const Index& index) {
    std::sort(entries.begin(), entries.end(), ranking_order(index));
}

RankedList select_top(std::span<const double> scores, const Index& index, std::size_t depth,
                      const PassageSet& exclude) {
    if (depth == 0) {
        throw std::invalid_argument("ranking depth must be at least 1");
    }
    std::vector<ScoredPassage> candidates;
    candidates.reserve(scores.size());
    for (PassageRef ref = 0; ref < scores.size(); ++ref) {
        if (!exclude.contains(ref)) {
            candidates.push_back(ScoredPassage{ref, scores[ref]});
        }
    }
    auto order = ranking_order(index);
    if (candidates.size() > depth) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(depth),
                          candidates.end(), order);
        candidates.resize(depth);
    } else {
        std::sort(candidates.begin(), candidates.end(), order);
    }
    return RankedList{"", std::move(candidates)};
}

std::vector<double> score_ql(const QueryModel& query_model, const Index& index, const RetrievalParams& params) {
    if (query_model.empty()) {
        throw std::invalid_argument("cannot rank with an empty query model");
    }
    const double mu = params.mu;
    std::vector<std::tuple<TermId, double, double>> terms;  // id, weight, mu * p(w|C)
    double used_weight = 0.0;
    double constant = 0.0;
    for (const auto& [term, weight] : query_model) {
        auto id = index.term_id(term);
        if (!id || index.collection_frequency(*id) == 0) {
            logger().warn("query term \"{}\" does not occur in the collection; skipped", term);
            continue;
        }
        double smoothed = mu * index.collection_prob(*id);
        terms.emplace_back(*id, weight, smoothed);
        used_weight += weight;
        constant += weight * std::log(smoothed);
    }
    std::vector<double> scores(index.passage_count(), 0.0);
    if (terms.empty()) {
        return scores;
    }
    for (PassageRef ref = 0; ref < scores.size(); ++ref) {
        scores[ref] = constant - used_weight * std::log(static_cast<double>(index.doc_length(ref)) + mu);
    }
    for (const auto& [id, weight, smoothed] : terms) {
        const double base = std::log(smoothed);
        for (const auto& post : index.postings(id)) {
            scores[post.passage] += weight * (std::log(post.tf + smoothed) - base);
        }
    }
    return scores;
}

RankedList rank_ql(const QueryModel& query_model, const Index& index, const RetrievalParams& params,
                   std::size_t depth, const PassageSet& exclude) {
    auto scores = score_ql(query_model, index, params);
    return select_top(scores, index, depth, exclude);
}

std::vector<double> score_bm25(const Query& query, const Index& index, const RetrievalParams& params) {
    std::vector<double> scores(index.passage_count(), 0.0);
    const double n = static_cast<double>(index.passage_count());
    const double avgdl = index.average_length();
    for (const auto& token : query.tokens) {
        auto id = index.term_id(token);
        if (!id) {
            continue;
        }
        const double df = index.document_frequency(*id);
        const double idf = std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
        if (idf == 0.0) {
            continue;
        }
        for (const auto& post : index.postings(*id)) {
            const double tf = post.tf;
            const double norm = params.k1 * (1.0 - params.b + params.b * index.doc_length(post.passage) / avgdl);
            scores[post.passage] += idf * tf * (params.k1 + 1.0) / (tf + norm);
        }
    }
    return scores;
}

RankedList rank_bm25(const Query& query, const Index& index, const RetrievalParams& params, std::size_t depth,
                     const PassageSet& exclude) {
    if (query.tokens.empty()) {
        throw std::invalid_argument("BM25 query has no tokens");
    }
    auto scores = score_bm25(query, index, params);
    return select_top(scores, index, depth, exclude);
}

std::vector<double> score_rocchio(const TermVector& query_vec, const Index& index) {
    std::vector<double> scores(index.passage_count(), 0.0);
    for (const auto& [term, weight] : query_vec.weights) {
        if (weight == 0.0) {
            continue;
        }
        auto id = index.term_id(term);
        if (!id) {
            continue;
        }
        const double idf = index.idf(*id);
        for (const auto& post : index.postings(*id)) {
            scores[post.passage] += weight * post.tf * idf;
        }
    }
    return scores;
}

RankedList rank_rocchio(const TermVector& query_vec, const Index& index, std::size_t depth,
                        const PassageSet& exclude) {
    if (query_vec.weights.empty()) {
        throw std::invalid_argument("cannot rank with an empty query vector");
    }
    auto scores = score_rocchio(query_vec, index);
    return select_top(scores, index, depth, exclude);
}

void write_trec_run(std::ostream& out, const RankedList& list, const Index& index, std::string_view tag) {
    std::size_t rank = 1;
    for (const auto& e : list.entries) {
        out << fmt::format("{} Q0 {} {} {:.10g} {}\n", list.query_id, index.passage_id(e.passage), rank++, e.score,
                           tag);
    }
}

void write_trec_run(std::ostream& out, std::string_view query_id, std::span<const std::string> passage_ids,
                    std::string_view tag) {
    const std::size_t n = passage_ids.size();
    for (std::size_t i = 0; i < n; ++i) {
        out << fmt::format("{} Q0 {} {} {} {}\n", query_id, passage_ids[i], i + 1, n - i, tag);
    }
}

Run read_trec_run(std::istream& in, const std::string& source) {
    struct Line {
        std::string pid;
        double score;
        long rank;
    };
    std::map<std::string, std::vector<Line>, std::less<>> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        std::string qid, q0, pid, rank_text, score_text, tag;
        if (!(fields >> qid >> q0 >> pid >> rank_text >> score_text >> tag)) {
            throw ParseError(source, lineno, "expected six columns \"qid Q0 pid rank score tag\"");
        }
        Line l{pid, 0.0, 0};
        try {
            std::size_t used = 0;
            l.rank = std::stol(rank_text, &used);
            if (used != rank_text.size()) {
                throw std::invalid_argument("rank");
            }
            l.score = std::stod(score_text, &used);
            if (used != score_text.size()) {
                throw std::invalid_argument("score");
            }
        } catch (const std::exception&) {
            throw ParseError(source, lineno, "rank or score is not numeric");
        }
        raw[qid].push_back(std::move(l));
    }
    Run run;
    for (auto& [qid, lines] : raw) {
        std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            return a.rank < b.rank;
        });
        auto& ids = run[qid];
        std::unordered_set<std::string> seen;
        for (auto& l : lines) {
            if (!seen.insert(l.pid).second) {
                logger().warn("{}: duplicate passage {} for query {} ignored", source, l.pid, qid);
                continue;
            }
            ids.push_back(std::move(l.pid));
        }
    }
    return run;
}

Run load_trec_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return read_trec_run(in, path.string());
}

}  // namespace irf
