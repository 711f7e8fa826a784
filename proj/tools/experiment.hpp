#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irf/embeddings.hpp"
#include "irf/evaluation.hpp"
#include "irf/simulation.hpp"
#include "irf/text.hpp"

namespace irf::cli {

/// Thrown for schema violations in an experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

/// Parsed experiment configuration. Every grid holds at least one value.
struct ExperimentConfig {
    std::filesystem::path passages, queries, qrels;

    TokenizerConfig tokenizer = TokenizerConfig::retrieval_default();

    std::vector<double> mu{300.0};
    std::vector<double> k1{1.2};
    std::vector<double> b{0.75};

    std::vector<Method> methods{Method::rm3, Method::distillation, Method::rocchio};
    std::vector<double> m{20};
    std::vector<double> alpha_interp{0.5};
    std::vector<double> lambda_mix{0.5};
    std::vector<double> lambda_nr{0.2};
    std::vector<double> rocchio_alpha{1.0};
    std::vector<double> rocchio_beta{0.75};
    std::vector<double> rocchio_gamma{0.15};
    std::size_t em_max_iters = 50;
    double em_tol = 1e-6;
    std::vector<double> erm_lambda{0.5};
    std::vector<double> erm_a{10.0};
    std::vector<double> erm_c{0.5};
    std::size_t erm_k = 10;

    std::optional<std::filesystem::path> embedding_model;
    TrainConfig train;

    /// Fusion is run for every feedback method when present.
    std::optional<std::vector<double>> lambda_sf;
    Representation representation = Representation::pvc;

    std::vector<std::pair<std::size_t, std::size_t>> settings = standard_settings();
    std::size_t tail_depth = 100;

    std::size_t draws = 10;
    std::size_t onerel_depth = 100;

    std::vector<Metric> metrics{Metric::map100, Metric::ndcg20};
    Metric objective = Metric::map100;
    std::size_t folds = 5;
    std::size_t samples = 100000;
    double significance = 0.05;

    std::filesystem::path output_dir = "irf-output";
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    /// Relative paths in the document resolve against `base_dir`. Throws
    /// ConfigError on unknown keys, wrong types, empty grids or a missing
    /// or unsupported schema_version.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    bool needs_embeddings() const;
    /// Checks every grid point of every variant; throws ConfigError.
    void validate_grids() const;
};

/// One configured ranking variant (e.g. "rm3", "rm3+pvc", "ql").
struct Variant {
    std::string name;
    Method method;
    bool fused = false;
};

/// Baselines first, then each feedback method and, with fusion configured,
/// its fused counterpart.
std::vector<Variant> variants(const ExperimentConfig& cfg);

/// Parameter grid searched for `v`.
Grid variant_grid(const ExperimentConfig& cfg, const Variant& v);

/// Loaded inputs shared by the experiment pipelines.
struct Workspace {
    PassageCollection collection;
    std::vector<Query> queries;
    Judgments qrels;
    Index index;
    std::shared_ptr<const EmbeddingModel> model;
    std::unique_ptr<SemanticContext> semantic;
};

Workspace load_workspace(const ExperimentConfig& cfg);

/// Runs every variant and setting with cross-validated parameters; writes
/// run files, traces, per-query CSV, chosen parameters and summary tables
/// into cfg.output_dir.
void run_irf_experiment(const ExperimentConfig& cfg, const Workspace& ws);

/// One-relevant-passage experiment with cross-validation over queries.
void run_onerel_experiment(const ExperimentConfig& cfg, const Workspace& ws);

}  // namespace irf::cli
