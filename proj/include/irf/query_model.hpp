#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace irf {

using TermWeights = std::map<std::string, double, std::less<>>;

/// Sparse term distribution: nonnegative weights summing to one.
class QueryModel {
  public:
    QueryModel() = default;

    /// Normalizes `weights` to sum to one. Throws std::invalid_argument on a
    /// negative or non-finite weight or when every weight is zero.
    static QueryModel from_weights(TermWeights weights);
    /// Maximum-likelihood model of a token sequence.
    static QueryModel mle(std::span<const std::string> tokens);

    double weight(std::string_view term) const;
    double total() const;
    std::size_t size() const { return weights_.size(); }
    bool empty() const { return weights_.empty(); }
    const TermWeights& weights() const { return weights_; }
    auto begin() const { return weights_.begin(); }
    auto end() const { return weights_.end(); }

    nlohmann::ordered_json to_json() const;
    static QueryModel from_json(const nlohmann::json& j);

    bool operator==(const QueryModel&) const = default;

  private:
    TermWeights weights_;
};

/// Vector-space query or document representation; weights are not normalized.
struct TermVector {
    TermWeights weights;

    double weight(std::string_view term) const;
    bool operator==(const TermVector&) const = default;
};

/// Keeps the `m` largest entries (ties broken by term, ascending).
TermWeights top_terms(const TermWeights& weights, std::size_t m);

}  // namespace irf
