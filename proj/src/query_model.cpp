#include "irf/query_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace irf {

QueryModel QueryModel::from_weights(TermWeights weights) {
    double sum = 0.0;
    for (const auto& [term, w] : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw std::invalid_argument("query model weight for \"" + term + "\" is negative or not finite");
        }
        sum += w;
    }
    if (sum <= 0.0) {
        throw std::invalid_argument("query model has no positive weight");
    }
    // Already-normalized input is kept bit-for-bit.
    const double scale = std::abs(sum - 1.0) > 1e-12 ? sum : 1.0;
    QueryModel m;
    for (auto& [term, w] : weights) {
        if (w > 0.0) {
            m.weights_.emplace(term, w / scale);
        }
    }
    return m;
}

QueryModel QueryModel::mle(std::span<const std::string> tokens) {
    TermWeights counts;
    for (const auto& t : tokens) {
        counts[t] += 1.0;
    }
    return from_weights(std::move(counts));
}

double QueryModel::weight(std::string_view term) const {
    auto it = weights_.find(term);
    return it == weights_.end() ? 0.0 : it->second;
}

double QueryModel::total() const {
    double s = 0.0;
    for (const auto& [_, w] : weights_) {
        s += w;
    }
    return s;
}

nlohmann::ordered_json QueryModel::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [term, w] : weights_) {
        j[term] = w;
    }
    return j;
}

QueryModel QueryModel::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw std::invalid_argument("query model JSON must be an object");
    }
    TermWeights w;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number()) {
            throw std::invalid_argument("query model weight for \"" + it.key() + "\" is not a number");
        }
        w[it.key()] = it.value().get<double>();
    }
    return from_weights(std::move(w));
}

double TermVector::weight(std::string_view term) const {
    auto it = weights.find(term);
    return it == weights.end() ? 0.0 : it->second;
}

TermWeights top_terms(const TermWeights& weights, std::size_t m) {
    if (weights.size() <= m) {
        return weights;
    }
    std::vector<std::pair<std::string, double>> items(weights.begin(), weights.end());
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(m), items.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) {
                              return a.second > b.second;
                          }
                          return a.first < b.first;
                      });
    items.resize(m);
    return TermWeights(items.begin(), items.end());
}

}  // namespace irf
