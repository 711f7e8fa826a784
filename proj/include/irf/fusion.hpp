#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "irf/embeddings.hpp"
#include "irf/feedback.hpp"
#include "irf/retrieval.hpp"

namespace irf {

struct FusionConfig {
    double lambda_sf = 1.0;
    Representation representation = Representation::pvc;

    void validate() const;
};

/// Tuning grids for lambda_sf: `webap` is {5, 10, ..., 40} and `psgrobust`
/// is {0.5, 1, ..., 5}.
std::vector<double> lambda_sf_grid(std::string_view profile);

/// Cosine between the mean of `pool` and `candidate`. Throws
/// std::invalid_argument on an empty pool.
double semantic_score(std::span<const std::vector<double>> pool, std::span<const double> candidate);

/// semantic_score over stored representations. Pool members without a
/// representation are left out of the centroid; a candidate without one
/// scores 0 (as does a pool where no member has one).
double semantic_score(std::span<const PassageRef> rel_pool, PassageRef candidate, const RepresentationTable& table);

/// Mean of the valid pool rows, or nullopt when none is valid.
std::optional<std::vector<double>> pool_centroid(std::span<const PassageRef> rel_pool,
                                                 const RepresentationTable& table);

/// score_rf(d) + lambda_sf * score_sem(RP, d) over the passages of `base`,
/// re-sorted with the ranking tie-break. Returns `base` unchanged when the
/// relevant pool is empty.
RankedList fused_rank(const RankedList& base, const FeedbackState& state, const SemanticContext& semantic,
                      const FusionConfig& cfg, const Index& index);

}  // namespace irf
