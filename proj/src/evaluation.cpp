#include "irf/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "irf/error.hpp"
#include "irf/log.hpp"

namespace irf {

Metric parse_metric(std::string_view name) {
    if (name == "map100" || name == "map") return Metric::map100;
    if (name == "ndcg20" || name == "ndcg") return Metric::ndcg20;
    if (name == "p1") return Metric::p1;
    if (name == "mrr") return Metric::mrr;
    throw std::invalid_argument("unknown metric: " + std::string(name));
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::map100: return "map100";
        case Metric::ndcg20: return "ndcg20";
        case Metric::p1: return "p1";
        case Metric::mrr: return "mrr";
    }
    return "map100";
}

std::vector<Metric> all_metrics() {
    return {Metric::map100, Metric::ndcg20, Metric::p1, Metric::mrr};
}

Relevance relevance_from_qrels(const Judgments& qrels) {
    Relevance out;
    for (const auto& [qid, grades] : qrels.entries()) {
        auto& set = out[qid];
        for (const auto& [pid, grade] : grades) {
            if (grade > 0) {
                set.insert(pid);
            }
        }
    }
    return out;
}

double evaluate_ranking(std::span<const std::string> ranking, const RelevantSet& relevant, Metric metric) {
    {
        std::unordered_set<std::string_view> seen;
        for (const auto& id : ranking) {
            if (!seen.insert(id).second) {
                throw std::invalid_argument("ranking lists passage " + id + " twice");
            }
        }
    }
    if (relevant.empty()) {
        logger().warn("empty relevant set; {} is 0", to_string(metric));
        return 0.0;
    }
    switch (metric) {
        case Metric::map100: {
            double sum = 0.0;
            std::size_t hits = 0;
            for (std::size_t k = 0; k < std::min<std::size_t>(100, ranking.size()); ++k) {
                if (relevant.contains(ranking[k])) {
                    ++hits;
                    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
                }
            }
            return sum / static_cast<double>(relevant.size());
        }
        case Metric::ndcg20: {
            double dcg = 0.0;
            for (std::size_t k = 0; k < std::min<std::size_t>(20, ranking.size()); ++k) {
                if (relevant.contains(ranking[k])) {
                    dcg += 1.0 / std::log2(static_cast<double>(k) + 2.0);
                }
            }
            double ideal = 0.0;
            for (std::size_t k = 0; k < std::min<std::size_t>(20, relevant.size()); ++k) {
                ideal += 1.0 / std::log2(static_cast<double>(k) + 2.0);
            }
            return dcg / ideal;
        }
        case Metric::p1:
            return !ranking.empty() && relevant.contains(ranking[0]) ? 1.0 : 0.0;
        case Metric::mrr:
            for (std::size_t k = 0; k < ranking.size(); ++k) {
                if (relevant.contains(ranking[k])) {
                    return 1.0 / static_cast<double>(k + 1);
                }
            }
            return 0.0;
    }
    return 0.0;
}

MetricResult evaluate_run(const Run& run, const Relevance& relevance, Metric metric) {
    if (run.empty()) {
        throw InputError("run is empty");
    }
    MetricResult r;
    r.metric = metric;
    static const RelevantSet none;
    double sum = 0.0;
    for (const auto& [topic, ids] : run) {
        auto it = relevance.find(topic);
        if (it == relevance.end()) {
            logger().warn("topic {} has no judgments", topic);
        }
        const double v = evaluate_ranking(ids, it == relevance.end() ? none : it->second, metric);
        r.per_query.emplace(topic, v);
        sum += v;
    }
    r.mean = sum / static_cast<double>(r.per_query.size());
    return r;
}

double fisher_randomization(std::span<const double> a, std::span<const double> b, std::size_t samples,
                            std::uint64_t seed, FisherMethod method) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("paired samples differ in length");
    }
    if (a.empty()) {
        throw std::invalid_argument("randomization test needs at least one topic");
    }
    const std::size_t n = a.size();
    std::vector<double> d(n);
    double observed = 0.0, magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = a[i] - b[i];
        observed += d[i];
        magnitude += std::abs(d[i]);
    }
    observed = std::abs(observed);
    const double eps = 1e-9 * (1.0 + magnitude);
    if (method == FisherMethod::automatic) {
        method = n <= 20 ? FisherMethod::exhaustive : FisherMethod::monte_carlo;
    }
    if (method == FisherMethod::exhaustive) {
        if (n > 30) {
            throw std::invalid_argument("exhaustive randomization limited to 30 topics");
        }
        // Gray-code walk: each step flips one sign.
        const std::uint64_t total = std::uint64_t{1} << n;
        double sum = std::accumulate(d.begin(), d.end(), 0.0);
        std::vector<int> sign(n, 1);
        std::uint64_t hits = 0;
        for (std::uint64_t k = 0; k < total; ++k) {
            if (k > 0) {
                const int bit = std::countr_zero(k);
                sum -= 2.0 * sign[bit] * d[bit];
                sign[bit] = -sign[bit];
            }
            if (std::abs(sum) >= observed - eps) {
                ++hits;
            }
        }
        return static_cast<double>(hits) / static_cast<double>(total);
    }
    if (samples == 0) {
        throw std::invalid_argument("Monte-Carlo randomization needs at least one sample");
    }
    std::mt19937_64 rng(seed);
    std::uint64_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double sum = 0.0;
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 64 == 0) {
                bits = rng();
            }
            sum += (bits & 1) ? d[i] : -d[i];
            bits >>= 1;
        }
        if (std::abs(sum) >= observed - eps) {
            ++hits;
        }
    }
    return static_cast<double>(hits + 1) / static_cast<double>(samples + 1);
}

double fisher_randomization(const MetricResult& a, const MetricResult& b, std::size_t samples, std::uint64_t seed,
                            FisherMethod method) {
    if (a.per_query.size() != b.per_query.size()) {
        throw std::invalid_argument("runs cover different topics");
    }
    std::vector<double> x, y;
    for (const auto& [topic, v] : a.per_query) {
        auto it = b.per_query.find(topic);
        if (it == b.per_query.end()) {
            throw std::invalid_argument("topic " + topic + " missing from the second run");
        }
        x.push_back(v);
        y.push_back(it->second);
    }
    return fisher_randomization(x, y, samples, seed, method);
}

std::vector<GridPoint> expand_grid(const Grid& grid) {
    if (grid.empty()) {
        throw std::invalid_argument("parameter grid is empty");
    }
    std::vector<GridPoint> points{GridPoint{}};
    for (const auto& [name, values] : grid) {
        if (values.empty()) {
            throw std::invalid_argument("grid parameter " + name + " has no values");
        }
        std::vector<GridPoint> next;
        next.reserve(points.size() * values.size());
        for (const auto& p : points) {
            for (double v : values) {
                auto q = p;
                q[name] = v;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

CrossValidation cross_validate(const std::vector<std::vector<double>>& scores, std::size_t folds,
                               std::uint64_t seed, std::span<const std::string> groups) {
    if (scores.empty()) {
        throw std::invalid_argument("parameter grid is empty");
    }
    const std::size_t topics = scores.front().size();
    for (const auto& row : scores) {
        if (row.size() != topics) {
            throw std::invalid_argument("score rows differ in topic count");
        }
    }
    if (!groups.empty() && groups.size() != topics) {
        throw std::invalid_argument("one group label per topic is required");
    }
    if (folds < 2) {
        throw std::invalid_argument("cross-validation needs at least two folds");
    }
    // Distinct groups in order of first appearance.
    std::vector<std::size_t> group_of(topics);
    std::size_t group_count = 0;
    if (groups.empty()) {
        std::iota(group_of.begin(), group_of.end(), std::size_t{0});
        group_count = topics;
    } else {
        std::map<std::string_view, std::size_t> ids;
        for (std::size_t t = 0; t < topics; ++t) {
            auto [it, fresh] = ids.emplace(groups[t], ids.size());
            group_of[t] = it->second;
        }
        group_count = ids.size();
    }
    if (group_count < folds) {
        throw std::invalid_argument(fmt::format("{} queries cannot fill {} folds", group_count, folds));
    }
    std::vector<std::size_t> order(group_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold_of_group(group_count);
    for (std::size_t i = 0; i < group_count; ++i) {
        fold_of_group[order[i]] = i % folds;
    }

    CrossValidation cv;
    cv.fold_of_topic.resize(topics);
    for (std::size_t t = 0; t < topics; ++t) {
        cv.fold_of_topic[t] = fold_of_group[group_of[t]];
    }
    cv.test_scores.assign(topics, 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t best = 0;
        double best_mean = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < scores.size(); ++p) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t t = 0; t < topics; ++t) {
                if (cv.fold_of_topic[t] != f) {
                    sum += scores[p][t];
                    ++count;
                }
            }
            const double mean = count ? sum / static_cast<double>(count) : 0.0;
            if (mean > best_mean) {
                best_mean = mean;
                best = p;
            }
        }
        cv.chosen.push_back(best);
        for (std::size_t t = 0; t < topics; ++t) {
            if (cv.fold_of_topic[t] == f) {
                cv.test_scores[t] = scores[best][t];
            }
        }
    }
    cv.mean = topics ? std::accumulate(cv.test_scores.begin(), cv.test_scores.end(), 0.0) / topics : 0.0;
    return cv;
}

void write_per_query_csv(std::ostream& out, std::span<const MetricResult> results) {
    out << "topic,metric,value\n";
    for (const auto& r : results) {
        for (const auto& [topic, v] : r.per_query) {
            out << fmt::format("{},{},{:.6f}\n", topic, to_string(r.metric), v);
        }
        out << fmt::format("all,{},{:.6f}\n", to_string(r.metric), r.mean);
    }
}

void write_summary_table(std::ostream& out, std::string_view title, std::span<const std::string> rows,
                         std::span<const std::string> columns, const std::vector<std::vector<std::string>>& cells) {
    std::size_t label_width = 0;
    for (const auto& r : rows) {
        label_width = std::max(label_width, r.size());
    }
    std::vector<std::size_t> width(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        width[c] = columns[c].size();
        for (const auto& row : cells) {
            if (c < row.size()) {
                width[c] = std::max(width[c], row[c].size());
            }
        }
    }
    out << title << '\n';
    out << fmt::format("{:<{}}", "", label_width);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out << "  " << fmt::format("{:>{}}", columns[c], width[c]);
    }
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << fmt::format("{:<{}}", rows[r], label_width);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const std::string cell = r < cells.size() && c < cells[r].size() ? cells[r][c] : "";
            out << "  " << fmt::format("{:>{}}", cell, width[c]);
        }
        out << '\n';
    }
}

}  // namespace irf
