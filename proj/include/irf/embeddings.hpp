#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "irf/corpus.hpp"
#include "irf/index.hpp"

namespace irf {

enum class TrainMode { skipgram, pv_hdc, pv_hdc_corrupted };

TrainMode parse_train_mode(std::string_view name);
std::string_view to_string(TrainMode mode);

struct TrainConfig {
    std::size_t dim = 100;
    std::size_t negatives = 10;
    double learning_rate = 0.05;
    std::size_t batch_size = 256;  ///< recorded with the model; updates are applied per prediction
    std::size_t window = 5;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    double corruption_q = 0.9;  ///< drop probability for pv_hdc_corrupted
    std::size_t min_count = 5;
    TrainMode mode = TrainMode::skipgram;
    /// 1 gives the deterministic single-worker trainer; more workers update
    /// shared parameters without locking and are not reproducible.
    std::size_t threads = 1;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);

    bool operator==(const TrainConfig&) const = default;
};

/// Word (input), context (output) and optional per-passage vectors, stored
/// row-major as float32.
class EmbeddingModel {
  public:
    std::size_t dim() const { return dim_; }
    std::size_t vocab_size() const { return words_.size(); }
    std::size_t passage_count() const { return passage_ids_.size(); }
    TrainMode mode() const { return mode_; }
    const TrainConfig& config() const { return config_; }
    /// Mean loss per predicted (input, output) pair, one entry per epoch.
    const std::vector<double>& epoch_loss() const { return epoch_loss_; }

    const std::vector<std::string>& words() const { return words_; }
    std::uint64_t word_count(std::uint32_t word) const { return counts_[word]; }
    std::optional<std::uint32_t> word_index(std::string_view word) const;

    std::span<const float> word_vector(std::uint32_t word) const;
    std::span<const float> context_vector(std::uint32_t word) const;
    std::optional<std::uint32_t> passage_index(std::string_view passage_id) const;
    std::span<const float> passage_vector(std::uint32_t row) const;
    const std::vector<std::string>& passage_ids() const { return passage_ids_; }

    /// The `k` vocabulary words with highest cosine to `word` (itself
    /// included), ordered by cosine descending then word index.
    std::vector<std::pair<std::uint32_t, double>> nearest(std::uint32_t word, std::size_t k) const;

    /// True when every stored value is finite.
    bool all_finite() const;

    void write(std::ostream& out) const;
    static EmbeddingModel read(std::istream& in, const std::string& source = "<model>");
    void save(const std::filesystem::path& path) const;
    static EmbeddingModel load(const std::filesystem::path& path);

    bool operator==(const EmbeddingModel&) const = default;

  private:
    friend class EmbeddingTrainer;
    friend EmbeddingModel make_embedding_model(std::vector<std::string> words, std::vector<std::vector<float>> vectors);

    void rebuild_lookup();

    std::size_t dim_ = 0;
    TrainMode mode_ = TrainMode::skipgram;
    TrainConfig config_;
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::vector<float> word_vectors_;
    std::vector<float> context_vectors_;
    std::vector<std::string> passage_ids_;
    std::vector<float> passage_vectors_;
    std::vector<double> epoch_loss_;
    std::unordered_map<std::string, std::uint32_t> word_lookup_;
    std::unordered_map<std::string, std::uint32_t> passage_lookup_;
};

/// Builds a model from explicit word vectors (no context or passage
/// vectors). Intended for tests and for importing external vectors.
EmbeddingModel make_embedding_model(std::vector<std::string> words, std::vector<std::vector<float>> vectors);

/// Skip-gram with negative sampling. Throws InputError when no word reaches
/// min_count.
EmbeddingModel train_skipgram(const PassageCollection& corpus, TrainConfig config);

/// PV-HDC: the passage representation predicts each observed word, and the
/// word then predicts its window. In corrupted mode the representation is
/// the dropout-scaled mean of the passage's word vectors, and the stored
/// passage vector is the plain mean.
EmbeddingModel train_pv_hdc(const PassageCollection& corpus, TrainConfig config);

/// Dispatches on config.mode.
EmbeddingModel train_embeddings(const PassageCollection& corpus, const TrainConfig& config);

enum class Representation { avg_w2v, idf_w2v, pv, pvc };

Representation parse_representation(std::string_view name);
std::string_view to_string(Representation r);

/// avg_w2v: mean of word vectors; idf_w2v: idf-weighted mean with
/// idf = ln(N/df) from `index`; pv / pvc: the stored passage row. Returns
/// nullopt when the passage has no usable token (or no stored row).
std::optional<std::vector<double>> try_passage_vector(const Passage& passage, const EmbeddingModel& model,
                                                      Representation mode, const Index& index);

/// Throwing form of try_passage_vector (std::domain_error).
std::vector<double> passage_vector(const Passage& passage, const EmbeddingModel& model, Representation mode,
                                   const Index& index);

/// Dense per-passage vectors for one representation; rows without a
/// representable token are flagged invalid and left zero.
struct RepresentationTable {
    std::size_t dim = 0;
    std::vector<double> rows;
    std::vector<std::uint8_t> valid;

    bool has(PassageRef ref) const { return valid[ref] != 0; }
    std::span<const double> row(PassageRef ref) const {
        return std::span<const double>(rows).subspan(static_cast<std::size_t>(ref) * dim, dim);
    }
};

/// An embedding model together with the collection re-tokenized the way the
/// model was trained (no stemming), in the same passage order as the
/// retrieval collection so PassageRefs agree.
class SemanticContext {
  public:
    SemanticContext(std::shared_ptr<const EmbeddingModel> model, const PassageCollection& collection,
                    TokenizerConfig config = TokenizerConfig::embedding_default());

    const EmbeddingModel& model() const { return *model_; }
    const PassageCollection& collection() const { return collection_; }
    const Index& index() const { return index_; }
    const TokenizerConfig& tokenizer() const { return config_; }

    /// Query tokens under the embedding tokenizer (falls back to the given
    /// tokens when the query has no text).
    std::vector<std::string> query_tokens(const Query& query) const;

    /// Computed once per representation; safe to call concurrently.
    const RepresentationTable& representations(Representation mode) const;

  private:
    std::shared_ptr<const EmbeddingModel> model_;
    TokenizerConfig config_;
    PassageCollection collection_;
    Index index_;
    mutable std::mutex mutex_;
    mutable std::map<Representation, std::unique_ptr<RepresentationTable>> tables_;
};

/// u.v / (|u||v|); zero when either norm is zero. Throws
/// std::invalid_argument on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);

/// Draws the positions kept by unbiased dropout: each of `n` positions
/// survives independently with probability 1-q. No draws are made when q is 0.
template <typename Rng>
void sample_kept(std::size_t n, double q, Rng& rng, std::vector<std::size_t>& kept) {
    kept.clear();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (q > 0.0 && unit(rng) < q) {
            continue;
        }
        kept.push_back(i);
    }
}

/// Weight of each kept vector: 1 / ((1-q) n). With q = 0 this is the plain mean.
inline double corruption_scale(std::size_t n, double q) {
    return 1.0 / ((1.0 - q) * static_cast<double>(n));
}

/// Unbiased-dropout passage representation: kept vectors are scaled by
/// 1/(1-q) and the sum is divided by the number of words, so the
/// expectation equals the plain mean. `kept` receives the kept positions.
template <typename Rng>
void corrupted_mean(std::span<const std::span<const float>> words, double q, Rng& rng, std::span<double> out,
                    std::vector<std::size_t>* kept = nullptr);

/// corrupted_mean with q = 0.
void plain_mean(std::span<const std::span<const float>> words, std::span<double> out);

namespace sgns {

/// ln sigmoid(x), stable for large |x|.
template <std::floating_point T>
T log_sigmoid(T x) {
    return x >= T(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <std::floating_point T>
T sigmoid(T x) {
    if (x >= T(0)) {
        return T(1) / (T(1) + std::exp(-x));
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

/// Negative-sampling loss for one input vector `h` against `rows` output
/// vectors laid out row-major in `outputs` (row 0 positive, the rest
/// negatives): -ln s(h.u0) - sum ln s(-h.un).
template <std::floating_point T>
T loss(std::span<const T> h, std::span<const T> outputs) {
    const std::size_t dim = h.size();
    const std::size_t rows = outputs.size() / dim;
    T total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        T dot = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            dot += h[i] * outputs[r * dim + i];
        }
        total -= r == 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
    }
    return total;
}

/// Loss plus analytic gradients. `grad_h` and `grad_outputs` are
/// accumulated into (not overwritten).
template <std::floating_point T>
T loss_and_grad(std::span<const T> h, std::span<const T> outputs, std::span<T> grad_h, std::span<T> grad_outputs) {
    const std::size_t dim = h.size();
    const std::size_t rows = outputs.size() / dim;
    T total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const T* u = outputs.data() + r * dim;
        T dot = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            dot += h[i] * u[i];
        }
        // d/d(dot) of the row's loss: sigma(dot) - 1 for the positive, sigma(dot) for a negative.
        T g;
        if (r == 0) {
            total -= log_sigmoid(dot);
            g = sigmoid(dot) - T(1);
        } else {
            total -= log_sigmoid(-dot);
            g = sigmoid(dot);
        }
        T* gu = grad_outputs.data() + r * dim;
        for (std::size_t i = 0; i < dim; ++i) {
            grad_h[i] += g * u[i];
            gu[i] += g * h[i];
        }
    }
    return total;
}

}  // namespace sgns

template <typename Rng>
void corrupted_mean(std::span<const std::span<const float>> words, double q, Rng& rng, std::span<double> out,
                    std::vector<std::size_t>* kept) {
    std::vector<std::size_t> local;
    std::vector<std::size_t>& positions = kept ? *kept : local;
    std::fill(out.begin(), out.end(), 0.0);
    sample_kept(words.size(), q, rng, positions);
    if (words.empty()) {
        return;
    }
    const double scale = corruption_scale(words.size(), q);
    for (std::size_t i : positions) {
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] += scale * words[i][d];
        }
    }
}

}  // namespace irf
