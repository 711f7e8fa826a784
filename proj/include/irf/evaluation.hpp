#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "irf/corpus.hpp"
#include "irf/retrieval.hpp"

namespace irf {

enum class Metric { map100, ndcg20, p1, mrr };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric m);
std::vector<Metric> all_metrics();

using RelevantSet = std::unordered_set<std::string>;
/// Relevant passage ids per evaluation topic.
using Relevance = std::map<std::string, RelevantSet, std::less<>>;

/// Binary relevance (grade > 0) for every judged query.
Relevance relevance_from_qrels(const Judgments& qrels);

/// Score of one ranking. map100 divides by the total number of relevant
/// passages; ndcg20 uses binary gains and a log2 discount. An empty relevant
/// set scores 0 with a warning. Throws std::invalid_argument on duplicates.
double evaluate_ranking(std::span<const std::string> ranking, const RelevantSet& relevant, Metric metric);

struct MetricResult {
    Metric metric = Metric::map100;
    std::map<std::string, double, std::less<>> per_query;
    double mean = 0.0;
};

/// Scores every topic of `run`. Topics missing from `relevance` score 0 with
/// a warning. Throws InputError on an empty run.
MetricResult evaluate_run(const Run& run, const Relevance& relevance, Metric metric);

enum class FisherMethod { automatic, exhaustive, monte_carlo };

/// Two-sided paired sign-flip test on the per-topic differences a - b.
/// Automatic mode enumerates all 2^n assignments when n <= 20 and otherwise
/// samples `samples` random assignments, giving (1 + hits) / (samples + 1).
double fisher_randomization(std::span<const double> a, std::span<const double> b, std::size_t samples = 100000,
                            std::uint64_t seed = 1, FisherMethod method = FisherMethod::automatic);

/// Aligned form; throws std::invalid_argument when topic sets differ.
double fisher_randomization(const MetricResult& a, const MetricResult& b, std::size_t samples = 100000,
                            std::uint64_t seed = 1, FisherMethod method = FisherMethod::automatic);

using GridPoint = std::map<std::string, double, std::less<>>;
using Grid = std::map<std::string, std::vector<double>, std::less<>>;

/// Cartesian product, first parameter varying slowest. Throws
/// std::invalid_argument on an empty grid or an empty value list.
std::vector<GridPoint> expand_grid(const Grid& grid);

struct CrossValidation {
    std::vector<std::size_t> fold_of_topic;   ///< fold index per topic
    std::vector<std::size_t> chosen;          ///< grid point index per fold
    std::vector<double> test_scores;          ///< held-out score per topic
    double mean = 0.0;
};

/// k-fold selection over a score matrix scores[point][topic]. Topics that
/// share a group (e.g. draws of one query) are kept in the same fold; an
/// empty `groups` puts every topic in its own group. Folds come from a
/// seeded shuffle of the groups. Each fold picks the point with the best
/// mean over the other folds (first point on ties).
CrossValidation cross_validate(const std::vector<std::vector<double>>& scores, std::size_t folds,
                               std::uint64_t seed, std::span<const std::string> groups = {});

/// "topic,metric,value" rows.
void write_per_query_csv(std::ostream& out, std::span<const MetricResult> results);

/// Aligned plain-text table: one line per row label, cells[row][column] as given.
void write_summary_table(std::ostream& out, std::string_view title, std::span<const std::string> rows,
                         std::span<const std::string> columns, const std::vector<std::vector<std::string>>& cells);

}  // namespace irf
