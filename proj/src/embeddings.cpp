#include "irf/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "binary_io.hpp"
#include "irf/error.hpp"
#include "irf/log.hpp"

namespace irf {

TrainMode parse_train_mode(std::string_view name) {
    if (name == "skipgram" || name == "w2v") {
        return TrainMode::skipgram;
    }
    if (name == "pv_hdc" || name == "pv") {
        return TrainMode::pv_hdc;
    }
    if (name == "pv_hdc_corrupted" || name == "pvc") {
        return TrainMode::pv_hdc_corrupted;
    }
    throw std::invalid_argument("unknown training mode: " + std::string(name));
}

std::string_view to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::skipgram: return "skipgram";
        case TrainMode::pv_hdc: return "pv_hdc";
        case TrainMode::pv_hdc_corrupted: return "pv_hdc_corrupted";
    }
    return "skipgram";
}

Representation parse_representation(std::string_view name) {
    if (name == "avg_w2v" || name == "w2v") {
        return Representation::avg_w2v;
    }
    if (name == "idf_w2v" || name == "idfw2v") {
        return Representation::idf_w2v;
    }
    if (name == "pv") {
        return Representation::pv;
    }
    if (name == "pvc") {
        return Representation::pvc;
    }
    throw std::invalid_argument("unknown passage representation: " + std::string(name));
}

std::string_view to_string(Representation r) {
    switch (r) {
        case Representation::avg_w2v: return "avg_w2v";
        case Representation::idf_w2v: return "idf_w2v";
        case Representation::pv: return "pv";
        case Representation::pvc: return "pvc";
    }
    return "avg_w2v";
}

void TrainConfig::validate() const {
    if (dim == 0) {
        throw std::invalid_argument("embedding dim must be positive");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("batch_size must be positive");
    }
    if (window == 0) {
        throw std::invalid_argument("window must be positive");
    }
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (!(corruption_q >= 0.0 && corruption_q < 1.0)) {
        throw std::invalid_argument("corruption_q must lie in [0, 1)");
    }
    if (threads == 0) {
        throw std::invalid_argument("threads must be at least 1");
    }
}

nlohmann::ordered_json TrainConfig::to_json() const {
    return nlohmann::ordered_json{{"dim", dim},
                                  {"negatives", negatives},
                                  {"learning_rate", learning_rate},
                                  {"batch_size", batch_size},
                                  {"window", window},
                                  {"epochs", epochs},
                                  {"seed", seed},
                                  {"corruption_q", corruption_q},
                                  {"min_count", min_count},
                                  {"mode", std::string(to_string(mode))},
                                  {"threads", threads}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "dim") c.dim = v.get<std::size_t>();
        else if (k == "negatives") c.negatives = v.get<std::size_t>();
        else if (k == "learning_rate") c.learning_rate = v.get<double>();
        else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
        else if (k == "window") c.window = v.get<std::size_t>();
        else if (k == "epochs") c.epochs = v.get<std::size_t>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else if (k == "corruption_q") c.corruption_q = v.get<double>();
        else if (k == "min_count") c.min_count = v.get<std::size_t>();
        else if (k == "mode") c.mode = parse_train_mode(v.get<std::string>());
        else if (k == "threads") c.threads = v.get<std::size_t>();
        else throw std::invalid_argument("unknown training option: " + k);
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// EmbeddingModel

std::optional<std::uint32_t> EmbeddingModel::word_index(std::string_view word) const {
    auto it = word_lookup_.find(std::string(word));
    if (it == word_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const float> EmbeddingModel::word_vector(std::uint32_t word) const {
    return std::span<const float>(word_vectors_).subspan(word * dim_, dim_);
}

std::span<const float> EmbeddingModel::context_vector(std::uint32_t word) const {
    return std::span<const float>(context_vectors_).subspan(word * dim_, dim_);
}

std::optional<std::uint32_t> EmbeddingModel::passage_index(std::string_view passage_id) const {
    auto it = passage_lookup_.find(std::string(passage_id));
    if (it == passage_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const float> EmbeddingModel::passage_vector(std::uint32_t row) const {
    return std::span<const float>(passage_vectors_).subspan(row * dim_, dim_);
}

std::vector<std::pair<std::uint32_t, double>> EmbeddingModel::nearest(std::uint32_t word, std::size_t k) const {
    std::vector<std::pair<std::uint32_t, double>> all;
    all.reserve(words_.size());
    auto target = word_vector(word);
    for (std::uint32_t w = 0; w < words_.size(); ++w) {
        all.emplace_back(w, cosine(target, word_vector(w)));
    }
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) {
                              return a.second > b.second;
                          }
                          return a.first < b.first;
                      });
    all.resize(k);
    return all;
}

bool EmbeddingModel::all_finite() const {
    auto finite = [](const std::vector<float>& v) {
        return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
    };
    return finite(word_vectors_) && finite(context_vectors_) && finite(passage_vectors_);
}

void EmbeddingModel::rebuild_lookup() {
    word_lookup_.clear();
    for (std::uint32_t i = 0; i < words_.size(); ++i) {
        word_lookup_.emplace(words_[i], i);
    }
    passage_lookup_.clear();
    for (std::uint32_t i = 0; i < passage_ids_.size(); ++i) {
        passage_lookup_.emplace(passage_ids_[i], i);
    }
}

namespace {

constexpr char kMagic[8] = {'I', 'R', 'F', 'E', 'M', 'B', 'E', 'D'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

// Layout: magic, u32 version, u32 dim, u32 |V|, u32 |P|, u32 mode,
// string metadata (JSON), |V| x (string word, u64 count), |P| x string id,
// u8 has_context, word vectors, [context vectors], passage vectors.
void EmbeddingModel::write(std::ostream& out) const {
    detail::BinaryWriter w(out);
    w.put_raw(kMagic, sizeof(kMagic));
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim_));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(words_.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(passage_ids_.size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(mode_));
    nlohmann::ordered_json meta{{"config", config_.to_json()}, {"epoch_loss", epoch_loss_}};
    w.put_string(meta.dump());
    for (std::size_t i = 0; i < words_.size(); ++i) {
        w.put_string(words_[i]);
        w.put<std::uint64_t>(counts_[i]);
    }
    for (const auto& id : passage_ids_) {
        w.put_string(id);
    }
    w.put<std::uint8_t>(context_vectors_.empty() ? 0 : 1);
    w.put_array(word_vectors_.data(), word_vectors_.size());
    if (!context_vectors_.empty()) {
        w.put_array(context_vectors_.data(), context_vectors_.size());
    }
    w.put_array(passage_vectors_.data(), passage_vectors_.size());
}

EmbeddingModel EmbeddingModel::read(std::istream& in, const std::string& source) {
    detail::BinaryReader r(in, source);
    char magic[sizeof(kMagic)];
    r.get_raw(magic, sizeof(magic));
    if (!std::equal(magic, magic + sizeof(magic), kMagic)) {
        r.fail("not an embedding model file");
    }
    auto version = r.get<std::uint32_t>();
    if (version != kVersion) {
        r.fail("unsupported embedding model version " + std::to_string(version));
    }
    EmbeddingModel m;
    m.dim_ = r.get<std::uint32_t>();
    auto vocab = r.get<std::uint32_t>();
    auto passages = r.get<std::uint32_t>();
    auto mode = r.get<std::uint32_t>();
    if (mode > static_cast<std::uint32_t>(TrainMode::pv_hdc_corrupted)) {
        r.fail("unknown training mode " + std::to_string(mode));
    }
    m.mode_ = static_cast<TrainMode>(mode);
    try {
        auto meta = nlohmann::json::parse(r.get_string());
        m.config_ = TrainConfig::from_json(meta.at("config"));
        m.epoch_loss_ = meta.at("epoch_loss").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("bad metadata: ") + e.what());
    }
    m.words_.reserve(vocab);
    m.counts_.reserve(vocab);
    for (std::uint32_t i = 0; i < vocab; ++i) {
        m.words_.push_back(r.get_string());
        m.counts_.push_back(r.get<std::uint64_t>());
    }
    for (std::uint32_t i = 0; i < passages; ++i) {
        m.passage_ids_.push_back(r.get_string());
    }
    bool has_context = r.get<std::uint8_t>() != 0;
    m.word_vectors_.resize(static_cast<std::size_t>(vocab) * m.dim_);
    r.get_array(m.word_vectors_.data(), m.word_vectors_.size());
    if (has_context) {
        m.context_vectors_.resize(static_cast<std::size_t>(vocab) * m.dim_);
        r.get_array(m.context_vectors_.data(), m.context_vectors_.size());
    }
    m.passage_vectors_.resize(static_cast<std::size_t>(passages) * m.dim_);
    r.get_array(m.passage_vectors_.data(), m.passage_vectors_.size());
    m.rebuild_lookup();
    return m;
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    write(out);
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return read(in, path.string());
}

EmbeddingModel make_embedding_model(std::vector<std::string> words, std::vector<std::vector<float>> vectors) {
    if (words.size() != vectors.size() || words.empty()) {
        throw std::invalid_argument("need one vector per word");
    }
    EmbeddingModel m;
    m.dim_ = vectors.front().size();
    m.config_.dim = m.dim_;
    m.words_ = std::move(words);
    m.counts_.assign(m.words_.size(), 0);
    for (const auto& v : vectors) {
        if (v.size() != m.dim_) {
            throw std::invalid_argument("word vectors differ in dimension");
        }
        m.word_vectors_.insert(m.word_vectors_.end(), v.begin(), v.end());
    }
    m.rebuild_lookup();
    return m;
}

// ---------------------------------------------------------------------------
// Training

class EmbeddingTrainer {
  public:
    EmbeddingTrainer(const PassageCollection& corpus, TrainConfig config) : corpus_(corpus), config_(config) {
        config_.validate();
    }

    EmbeddingModel run() {
        build_vocabulary();
        initialize();
        const std::size_t workers = std::max<std::size_t>(1, config_.threads);
        for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
            std::vector<std::uint32_t> order(docs_.size());
            std::iota(order.begin(), order.end(), 0U);
            std::mt19937_64 shuffle_rng(config_.seed * 1000003ULL + epoch);
            std::shuffle(order.begin(), order.end(), shuffle_rng);

            std::vector<Worker> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back(*this, config_.seed + 7919ULL * (epoch * workers + w + 1));
            }
            if (workers == 1) {
                pool[0].process(order);
            } else {
                std::vector<std::thread> threads;
                const std::size_t chunk = (order.size() + workers - 1) / workers;
                for (std::size_t w = 0; w < workers; ++w) {
                    std::size_t begin = std::min(order.size(), w * chunk);
                    std::size_t end = std::min(order.size(), begin + chunk);
                    threads.emplace_back([&pool, &order, w, begin, end] {
                        pool[w].process(std::span<const std::uint32_t>(order).subspan(begin, end - begin));
                    });
                }
                for (auto& t : threads) {
                    t.join();
                }
            }
            double loss = 0.0;
            std::uint64_t predictions = 0;
            for (const auto& worker : pool) {
                loss += worker.loss;
                predictions += worker.predictions;
            }
            model_.epoch_loss_.push_back(predictions ? loss / static_cast<double>(predictions) : 0.0);
        }
        finalize();
        return std::move(model_);
    }

  private:
    struct Worker {
        Worker(EmbeddingTrainer& t, std::uint64_t seed)
            : trainer(t), dim(t.config_.dim), lr(static_cast<float>(t.config_.learning_rate)), rng(seed),
              negative_dist(t.negative_dist_), h(dim), grad_h(dim), h_double(dim) {}

        EmbeddingTrainer& trainer;
        std::size_t dim;
        float lr;
        std::mt19937_64 rng;
        std::discrete_distribution<std::uint32_t> negative_dist;
        std::vector<float> h, grad_h, outputs, grad_outputs;
        std::vector<double> h_double;
        std::vector<std::uint32_t> output_ids;
        std::vector<std::size_t> kept;
        double loss = 0.0;
        std::uint64_t predictions = 0;

        static void load_row(const std::vector<float>& params, std::size_t row, std::size_t dim, float* out) {
            auto* base = const_cast<float*>(params.data()) + row * dim;
            for (std::size_t i = 0; i < dim; ++i) {
                out[i] = std::atomic_ref<float>(base[i]).load(std::memory_order_relaxed);
            }
        }

        /// params[row] -= lr * scale * g, without locking.
        void update(std::vector<float>& params, std::uint32_t row, const float* g, float scale = 1.0f) const {
            float* p = params.data() + static_cast<std::size_t>(row) * dim;
            const float step = lr * scale;
            for (std::size_t i = 0; i < dim; ++i) {
                std::atomic_ref<float> ref(p[i]);
                ref.store(ref.load(std::memory_order_relaxed) - step * g[i], std::memory_order_relaxed);
            }
        }

        // Gathers [positive, negatives...] context rows for one prediction.
        void gather_outputs(std::uint32_t positive) {
            output_ids.clear();
            output_ids.push_back(positive);
            for (std::size_t n = 0; n < trainer.config_.negatives; ++n) {
                std::uint32_t neg = negative_dist(rng);
                if (neg == positive) {
                    continue;
                }
                output_ids.push_back(neg);
            }
            outputs.resize(output_ids.size() * dim);
            grad_outputs.assign(output_ids.size() * dim, 0.0f);
            for (std::size_t r = 0; r < output_ids.size(); ++r) {
                load_row(trainer.model_.context_vectors_, output_ids[r], dim, outputs.data() + r * dim);
            }
        }

        // One negative-sampling prediction from the input already in `h`;
        // updates the output vectors and leaves the input gradient in grad_h.
        void predict(std::uint32_t positive) {
            gather_outputs(positive);
            std::fill(grad_h.begin(), grad_h.end(), 0.0f);
            loss += sgns::loss_and_grad<float>(h, outputs, grad_h, grad_outputs);
            ++predictions;
            for (std::size_t r = 0; r < output_ids.size(); ++r) {
                update(trainer.model_.context_vectors_, output_ids[r], grad_outputs.data() + r * dim);
            }
        }

        void process(std::span<const std::uint32_t> passages) {
            const auto& docs = trainer.docs_;
            const auto mode = trainer.config_.mode;
            const std::size_t window = trainer.config_.window;
            const double q = trainer.config_.corruption_q;
            for (std::uint32_t p : passages) {
                const auto& doc = docs[p];
                for (std::size_t t = 0; t < doc.size(); ++t) {
                    const std::uint32_t center = doc[t];
                    if (mode == TrainMode::pv_hdc) {
                        load_row(trainer.model_.passage_vectors_, p, dim, h.data());
                        predict(center);
                        update(trainer.model_.passage_vectors_, p, grad_h.data());
                    } else if (mode == TrainMode::pv_hdc_corrupted) {
                        sample_kept(doc.size(), q, rng, kept);
                        const double scale = corruption_scale(doc.size(), q);
                        std::fill(h_double.begin(), h_double.end(), 0.0);
                        for (std::size_t i : kept) {
                            load_row(trainer.model_.word_vectors_, doc[i], dim, h.data());
                            for (std::size_t d = 0; d < dim; ++d) {
                                h_double[d] += scale * h[d];
                            }
                        }
                        for (std::size_t d = 0; d < dim; ++d) {
                            h[d] = static_cast<float>(h_double[d]);
                        }
                        predict(center);
                        for (std::size_t i : kept) {
                            update(trainer.model_.word_vectors_, doc[i], grad_h.data(), static_cast<float>(scale));
                        }
                    }
                    // The observed word predicts its window.
                    const std::size_t lo = t >= window ? t - window : 0;
                    const std::size_t hi = std::min(doc.size(), t + window + 1);
                    for (std::size_t j = lo; j < hi; ++j) {
                        if (j == t) {
                            continue;
                        }
                        load_row(trainer.model_.word_vectors_, center, dim, h.data());
                        predict(doc[j]);
                        update(trainer.model_.word_vectors_, center, grad_h.data());
                    }
                }
            }
        }
    };

    void build_vocabulary() {
        std::map<std::string, std::uint64_t, std::less<>> counts;
        for (const auto& p : corpus_.passages()) {
            for (const auto& t : p.tokens) {
                ++counts[t];
            }
        }
        std::vector<std::pair<std::string, std::uint64_t>> kept;
        for (auto& [word, c] : counts) {
            if (c >= config_.min_count) {
                kept.emplace_back(word, c);
            }
        }
        if (kept.empty()) {
            throw InputError("no word occurs at least " + std::to_string(config_.min_count) +
                             " times; embedding vocabulary is empty");
        }
        std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        for (auto& [word, c] : kept) {
            model_.words_.push_back(word);
            model_.counts_.push_back(c);
        }
        model_.rebuild_lookup();
        docs_.reserve(corpus_.size());
        for (const auto& p : corpus_.passages()) {
            std::vector<std::uint32_t> ids;
            for (const auto& t : p.tokens) {
                if (auto id = model_.word_index(t)) {
                    ids.push_back(*id);
                }
            }
            docs_.push_back(std::move(ids));
        }
        std::vector<double> weights;
        weights.reserve(model_.counts_.size());
        for (auto c : model_.counts_) {
            weights.push_back(std::pow(static_cast<double>(c), 0.75));
        }
        negative_dist_ = std::discrete_distribution<std::uint32_t>(weights.begin(), weights.end());
    }

    void initialize() {
        const std::size_t dim = config_.dim;
        model_.dim_ = dim;
        model_.mode_ = config_.mode;
        model_.config_ = config_;
        std::mt19937_64 rng(config_.seed);
        std::uniform_real_distribution<float> init(-0.5f / static_cast<float>(dim), 0.5f / static_cast<float>(dim));
        model_.word_vectors_.resize(model_.words_.size() * dim);
        for (auto& x : model_.word_vectors_) {
            x = init(rng);
        }
        model_.context_vectors_.assign(model_.words_.size() * dim, 0.0f);
        if (config_.mode == TrainMode::pv_hdc) {
            model_.passage_vectors_.resize(corpus_.size() * dim);
            for (auto& x : model_.passage_vectors_) {
                x = init(rng);
            }
        }
    }

    void finalize() {
        if (config_.mode == TrainMode::skipgram) {
            return;
        }
        model_.passage_ids_.reserve(corpus_.size());
        for (const auto& p : corpus_.passages()) {
            model_.passage_ids_.push_back(p.passage_id);
        }
        if (config_.mode == TrainMode::pv_hdc_corrupted) {
            const std::size_t dim = config_.dim;
            model_.passage_vectors_.assign(corpus_.size() * dim, 0.0f);
            std::vector<double> mean(dim);
            std::vector<std::span<const float>> rows;
            for (std::size_t p = 0; p < docs_.size(); ++p) {
                rows.clear();
                for (auto w : docs_[p]) {
                    rows.push_back(model_.word_vector(w));
                }
                plain_mean(rows, mean);
                for (std::size_t d = 0; d < dim; ++d) {
                    model_.passage_vectors_[p * dim + d] = static_cast<float>(mean[d]);
                }
            }
        }
        model_.rebuild_lookup();
    }

    const PassageCollection& corpus_;
    TrainConfig config_;
    EmbeddingModel model_;
    std::vector<std::vector<std::uint32_t>> docs_;
    std::discrete_distribution<std::uint32_t> negative_dist_;
};

EmbeddingModel train_skipgram(const PassageCollection& corpus, TrainConfig config) {
    config.mode = TrainMode::skipgram;
    return EmbeddingTrainer(corpus, config).run();
}

EmbeddingModel train_pv_hdc(const PassageCollection& corpus, TrainConfig config) {
    if (config.mode == TrainMode::skipgram) {
        throw std::invalid_argument("train_pv_hdc needs mode pv_hdc or pv_hdc_corrupted");
    }
    return EmbeddingTrainer(corpus, config).run();
}

EmbeddingModel train_embeddings(const PassageCollection& corpus, const TrainConfig& config) {
    return config.mode == TrainMode::skipgram ? train_skipgram(corpus, config) : train_pv_hdc(corpus, config);
}

// ---------------------------------------------------------------------------
// Passage representations

void plain_mean(std::span<const std::span<const float>> words, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (words.empty()) {
        return;
    }
    const double scale = corruption_scale(words.size(), 0.0);
    for (const auto& w : words) {
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] += scale * w[d];
        }
    }
}

std::optional<std::vector<double>> try_passage_vector(const Passage& passage, const EmbeddingModel& model,
                                                      Representation mode, const Index& index) {
    const std::size_t dim = model.dim();
    std::vector<double> out(dim, 0.0);
    std::vector<std::uint32_t> ids;
    for (const auto& t : passage.tokens) {
        if (auto id = model.word_index(t)) {
            ids.push_back(*id);
        }
    }
    if (ids.empty()) {
        return std::nullopt;
    }
    switch (mode) {
        case Representation::avg_w2v: {
            std::vector<std::span<const float>> rows;
            rows.reserve(ids.size());
            for (auto id : ids) {
                rows.push_back(model.word_vector(id));
            }
            plain_mean(rows, out);
            return out;
        }
        case Representation::idf_w2v: {
            double total = 0.0;
            for (auto id : ids) {
                const double idf = index.idf(model.words()[id]);
                if (idf == 0.0) {
                    continue;
                }
                auto v = model.word_vector(id);
                for (std::size_t d = 0; d < dim; ++d) {
                    out[d] += idf * v[d];
                }
                total += idf;
            }
            if (total <= 0.0) {
                return std::nullopt;
            }
            for (auto& x : out) {
                x /= total;
            }
            return out;
        }
        case Representation::pv:
        case Representation::pvc: {
            auto row = model.passage_index(passage.passage_id);
            if (!row) {
                return std::nullopt;
            }
            auto v = model.passage_vector(*row);
            std::copy(v.begin(), v.end(), out.begin());
            return out;
        }
    }
    return std::nullopt;
}

std::vector<double> passage_vector(const Passage& passage, const EmbeddingModel& model, Representation mode,
                                   const Index& index) {
    auto v = try_passage_vector(passage, model, mode, index);
    if (!v) {
        throw std::domain_error("passage " + passage.passage_id + " has no representable tokens");
    }
    return std::move(*v);
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> u, std::span<const T> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine of vectors with different dimensions");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<double>(u[i]) * v[i];
        nu += static_cast<double>(u[i]) * u[i];
        nv += static_cast<double>(v[i]) * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
    return cosine_impl(u, v);
}

double cosine(std::span<const float> u, std::span<const float> v) {
    return cosine_impl(u, v);
}

// ---------------------------------------------------------------------------
// SemanticContext

SemanticContext::SemanticContext(std::shared_ptr<const EmbeddingModel> model, const PassageCollection& collection,
                                 TokenizerConfig config)
    : model_(std::move(model)), config_(std::move(config)), collection_(collection.retokenized(config_)),
      index_(Index::build(collection_)) {
    if (!model_) {
        throw std::invalid_argument("semantic context needs an embedding model");
    }
}

std::vector<std::string> SemanticContext::query_tokens(const Query& query) const {
    if (query.text.empty()) {
        return query.tokens;
    }
    return tokenize(query.text, config_);
}

const RepresentationTable& SemanticContext::representations(Representation mode) const {
    std::lock_guard lock(mutex_);
    auto& slot = tables_[mode];
    if (!slot) {
        auto table = std::make_unique<RepresentationTable>();
        table->dim = model_->dim();
        table->rows.assign(collection_.size() * table->dim, 0.0);
        table->valid.assign(collection_.size(), 0);
        std::size_t missing = 0;
        for (PassageRef ref = 0; ref < collection_.size(); ++ref) {
            auto v = try_passage_vector(collection_[ref], *model_, mode, index_);
            if (!v) {
                ++missing;
                continue;
            }
            std::copy(v->begin(), v->end(), table->rows.begin() + static_cast<std::ptrdiff_t>(ref * table->dim));
            table->valid[ref] = 1;
        }
        if (missing > 0) {
            logger().warn("{} of {} passages have no {} representation", missing, collection_.size(),
                          to_string(mode));
        }
        slot = std::move(table);
    }
    return *slot;
}

}  // namespace irf
