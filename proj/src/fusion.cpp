#include "irf/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "irf/log.hpp"

namespace irf {

void FusionConfig::validate() const {
    if (!(lambda_sf >= 0.0) || !std::isfinite(lambda_sf)) {
        throw std::invalid_argument("lambda_sf must be a nonnegative number");
    }
}

std::vector<double> lambda_sf_grid(std::string_view profile) {
    std::vector<double> grid;
    if (profile == "webap") {
        for (int i = 1; i <= 8; ++i) {
            grid.push_back(5.0 * i);
        }
    } else if (profile == "psgrobust") {
        for (int i = 1; i <= 10; ++i) {
            grid.push_back(0.5 * i);
        }
    } else {
        throw std::invalid_argument("unknown lambda_sf grid profile: " + std::string(profile));
    }
    return grid;
}

double semantic_score(std::span<const std::vector<double>> pool, std::span<const double> candidate) {
    if (pool.empty()) {
        throw std::invalid_argument("semantic score needs a nonempty pool");
    }
    std::vector<double> centroid(candidate.size(), 0.0);
    for (const auto& v : pool) {
        if (v.size() != candidate.size()) {
            throw std::invalid_argument("pool vector dimension differs from candidate");
        }
        for (std::size_t d = 0; d < v.size(); ++d) {
            centroid[d] += v[d];
        }
    }
    for (auto& x : centroid) {
        x /= static_cast<double>(pool.size());
    }
    return cosine(centroid, candidate);
}

std::optional<std::vector<double>> pool_centroid(std::span<const PassageRef> rel_pool,
                                                 const RepresentationTable& table) {
    std::vector<double> centroid(table.dim, 0.0);
    std::size_t used = 0;
    for (auto ref : rel_pool) {
        if (!table.has(ref)) {
            continue;
        }
        auto row = table.row(ref);
        for (std::size_t d = 0; d < table.dim; ++d) {
            centroid[d] += row[d];
        }
        ++used;
    }
    if (used == 0) {
        return std::nullopt;
    }
    for (auto& x : centroid) {
        x /= static_cast<double>(used);
    }
    return centroid;
}

double semantic_score(std::span<const PassageRef> rel_pool, PassageRef candidate, const RepresentationTable& table) {
    if (rel_pool.empty()) {
        throw std::invalid_argument("semantic score needs a nonempty pool");
    }
    auto centroid = pool_centroid(rel_pool, table);
    if (!centroid || !table.has(candidate)) {
        return 0.0;
    }
    return cosine(*centroid, table.row(candidate));
}

RankedList fused_rank(const RankedList& base, const FeedbackState& state, const SemanticContext& semantic,
                      const FusionConfig& cfg, const Index& index) {
    cfg.validate();
    if (state.relevant_pool.empty()) {
        return base;
    }
    const auto& table = semantic.representations(cfg.representation);
    auto centroid = pool_centroid(state.relevant_pool, table);
    if (!centroid) {
        logger().warn("query {}: no relevant passage has a {} representation; fusion skipped", base.query_id,
                      to_string(cfg.representation));
        return base;
    }
    RankedList out{base.query_id, base.entries};
    std::size_t unrepresented = 0;
    for (auto& e : out.entries) {
        if (!table.has(e.passage)) {
            ++unrepresented;
            continue;
        }
        e.score += cfg.lambda_sf * cosine(*centroid, table.row(e.passage));
    }
    if (unrepresented > 0) {
        logger().warn("query {}: {} candidate(s) without a {} representation get semantic score 0", base.query_id,
                      unrepresented, to_string(cfg.representation));
    }
    sort_ranked(out.entries, index);
    return out;
}

}  // namespace irf
