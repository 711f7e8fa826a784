#include "experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "irf/error.hpp"
#include "irf/log.hpp"

namespace irf::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
        throw ConfigError(fmt::format("{} must be an object", section));
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError(fmt::format("unknown key {}.{}", section, it.key()));
        }
    }
}

std::string where(std::string_view section, std::string_view key) {
    return section.empty() ? std::string(key) : fmt::format("{}.{}", section, key);
}

/// A number or a non-empty array of numbers.
std::vector<double> grid_of(const json& v, std::string_view name) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& x : v) {
            if (!x.is_number()) {
                throw ConfigError(fmt::format("{} must hold numbers", name));
            }
            out.push_back(x.get<double>());
        }
    } else {
        throw ConfigError(fmt::format("{} must be a number or an array of numbers", name));
    }
    if (out.empty()) {
        throw ConfigError(fmt::format("grid {} is empty", name));
    }
    return out;
}

std::size_t count_of(const json& v, std::string_view name, std::size_t min = 0) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(fmt::format("{} must be a nonnegative integer", name));
    }
    auto n = v.get<std::size_t>();
    if (n < min) {
        throw ConfigError(fmt::format("{} must be at least {}", name, min));
    }
    return n;
}

double number_of(const json& v, std::string_view name) {
    if (!v.is_number()) {
        throw ConfigError(fmt::format("{} must be a number", name));
    }
    return v.get<double>();
}

std::string string_of(const json& v, std::string_view name) {
    if (!v.is_string()) {
        throw ConfigError(fmt::format("{} must be a string", name));
    }
    return v.get<std::string>();
}

fs::path path_of(const json& v, std::string_view name, const fs::path& base) {
    fs::path p = string_of(v, name);
    return p.is_relative() && !base.empty() ? base / p : p;
}

template <typename F>
auto wrap(std::string_view name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("{}: {}", name, e.what()));
    }
}

void parse_tokenizer(const json& j, TokenizerConfig& tok) {
    check_keys(j, "tokenizer", {"stemming", "stopwords"});
    if (j.contains("stemming")) {
        tok.stemming = wrap("tokenizer.stemming", [&] { return parse_stemming(string_of(j["stemming"], "tokenizer.stemming")); });
    }
    if (j.contains("stopwords")) {
        const auto& s = j["stopwords"];
        if (s.is_string() && s == "default") {
            tok.stopwords = default_stopwords();
        } else if (s.is_string() && s == "none") {
            tok.stopwords.clear();
        } else if (s.is_array()) {
            tok.stopwords.clear();
            for (const auto& w : s) {
                tok.stopwords.insert(string_of(w, "tokenizer.stopwords[]"));
            }
        } else {
            throw ConfigError("tokenizer.stopwords must be \"default\", \"none\" or a list of words");
        }
    }
}

std::string format_value(double v) {
    return fmt::format("{}", v);
}

std::string cell(double v) {
    return fmt::format("{:.4f}", v);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base) {
    check_keys(j, "config",
               {"schema_version", "corpus", "tokenizer", "retrieval", "feedback", "embeddings", "fusion", "session",
                "onerel", "evaluation", "output_dir", "seed", "threads"});
    if (!j.contains("schema_version")) {
        throw ConfigError("schema_version is required");
    }
    if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
        throw ConfigError(fmt::format("unsupported schema_version {} (expected {})", j["schema_version"].dump(),
                                      kSchemaVersion));
    }
    ExperimentConfig c;
    bool train_mode_given = false;
    if (!j.contains("corpus")) {
        throw ConfigError("corpus section is required");
    }
    {
        const auto& s = j["corpus"];
        check_keys(s, "corpus", {"passages", "queries", "qrels"});
        for (auto key : {"passages", "queries", "qrels"}) {
            if (!s.contains(key)) {
                throw ConfigError(fmt::format("corpus.{} is required", key));
            }
        }
        c.passages = path_of(s["passages"], "corpus.passages", base);
        c.queries = path_of(s["queries"], "corpus.queries", base);
        c.qrels = path_of(s["qrels"], "corpus.qrels", base);
    }
    if (j.contains("tokenizer")) {
        parse_tokenizer(j["tokenizer"], c.tokenizer);
    }
    if (j.contains("retrieval")) {
        const auto& s = j["retrieval"];
        check_keys(s, "retrieval", {"mu", "k1", "b"});
        if (s.contains("mu")) c.mu = grid_of(s["mu"], "retrieval.mu");
        if (s.contains("k1")) c.k1 = grid_of(s["k1"], "retrieval.k1");
        if (s.contains("b")) c.b = grid_of(s["b"], "retrieval.b");
    }
    if (j.contains("feedback")) {
        const auto& s = j["feedback"];
        check_keys(s, "feedback",
                   {"methods", "m", "alpha_interp", "lambda_mix", "lambda_nr", "rocchio_alpha", "rocchio_beta",
                    "rocchio_gamma", "em_max_iters", "em_tol", "erm_lambda", "erm_a", "erm_c", "erm_k"});
        if (s.contains("methods")) {
            if (!s["methods"].is_array() || s["methods"].empty()) {
                throw ConfigError("feedback.methods must be a non-empty array");
            }
            c.methods.clear();
            for (const auto& m : s["methods"]) {
                auto method = wrap("feedback.methods", [&] { return parse_method(string_of(m, "feedback.methods[]")); });
                if (method == Method::ql || method == Method::bm25) {
                    throw ConfigError("feedback.methods lists feedback methods; baselines are always run");
                }
                if (std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end()) {
                    throw ConfigError(fmt::format("feedback.methods repeats {}", to_string(method)));
                }
                c.methods.push_back(method);
            }
        }
        auto grid = [&](const char* key, std::vector<double>& dst) {
            if (s.contains(key)) dst = grid_of(s[key], where("feedback", key));
        };
        grid("m", c.m);
        grid("alpha_interp", c.alpha_interp);
        grid("lambda_mix", c.lambda_mix);
        grid("lambda_nr", c.lambda_nr);
        grid("rocchio_alpha", c.rocchio_alpha);
        grid("rocchio_beta", c.rocchio_beta);
        grid("rocchio_gamma", c.rocchio_gamma);
        grid("erm_lambda", c.erm_lambda);
        grid("erm_a", c.erm_a);
        grid("erm_c", c.erm_c);
        if (s.contains("em_max_iters")) c.em_max_iters = count_of(s["em_max_iters"], "feedback.em_max_iters", 1);
        if (s.contains("em_tol")) c.em_tol = number_of(s["em_tol"], "feedback.em_tol");
        if (s.contains("erm_k")) c.erm_k = count_of(s["erm_k"], "feedback.erm_k", 1);
    }
    if (j.contains("embeddings")) {
        const auto& s = j["embeddings"];
        check_keys(s, "embeddings", {"model", "train"});
        if (s.contains("model")) c.embedding_model = path_of(s["model"], "embeddings.model", base);
        if (s.contains("train")) {
            c.train = wrap("embeddings.train", [&] { return TrainConfig::from_json(s["train"]); });
            train_mode_given = s["train"].is_object() && s["train"].contains("mode");
        }
    }
    if (j.contains("fusion")) {
        const auto& s = j["fusion"];
        check_keys(s, "fusion", {"lambda_sf", "profile", "representation"});
        if (s.contains("lambda_sf") && s.contains("profile")) {
            throw ConfigError("fusion takes either lambda_sf or profile, not both");
        }
        if (s.contains("lambda_sf")) {
            c.lambda_sf = grid_of(s["lambda_sf"], "fusion.lambda_sf");
        } else if (s.contains("profile")) {
            c.lambda_sf = wrap("fusion.profile", [&] { return lambda_sf_grid(string_of(s["profile"], "fusion.profile")); });
        } else {
            throw ConfigError("fusion needs lambda_sf or profile");
        }
        for (double l : *c.lambda_sf) {
            if (!(l >= 0.0)) {
                throw ConfigError("fusion.lambda_sf values must be nonnegative");
            }
        }
        if (s.contains("representation")) {
            c.representation = wrap("fusion.representation", [&] {
                return parse_representation(string_of(s["representation"], "fusion.representation"));
            });
        }
    }
    if (j.contains("session")) {
        const auto& s = j["session"];
        check_keys(s, "session", {"settings", "tail_depth"});
        if (s.contains("settings")) {
            const auto& list = s["settings"];
            if (!list.is_array() || list.empty()) {
                throw ConfigError("session.settings must be a non-empty array of [N, iterations] pairs");
            }
            c.settings.clear();
            for (const auto& p : list) {
                if (!p.is_array() || p.size() != 2) {
                    throw ConfigError("session.settings entries must be [N, iterations] pairs");
                }
                c.settings.emplace_back(count_of(p[0], "session.settings N", 1),
                                        count_of(p[1], "session.settings iterations", 1));
            }
        }
        if (s.contains("tail_depth")) c.tail_depth = count_of(s["tail_depth"], "session.tail_depth", 1);
    }
    if (j.contains("onerel")) {
        const auto& s = j["onerel"];
        check_keys(s, "onerel", {"draws", "depth"});
        if (s.contains("draws")) c.draws = count_of(s["draws"], "onerel.draws", 1);
        if (s.contains("depth")) c.onerel_depth = count_of(s["depth"], "onerel.depth", 1);
    }
    if (j.contains("evaluation")) {
        const auto& s = j["evaluation"];
        check_keys(s, "evaluation", {"metrics", "objective", "folds", "samples", "alpha"});
        if (s.contains("metrics")) {
            if (!s["metrics"].is_array() || s["metrics"].empty()) {
                throw ConfigError("evaluation.metrics must be a non-empty array");
            }
            c.metrics.clear();
            for (const auto& m : s["metrics"]) {
                c.metrics.push_back(
                    wrap("evaluation.metrics", [&] { return parse_metric(string_of(m, "evaluation.metrics[]")); }));
            }
        }
        if (s.contains("objective")) {
            c.objective = wrap("evaluation.objective",
                               [&] { return parse_metric(string_of(s["objective"], "evaluation.objective")); });
        }
        if (s.contains("folds")) c.folds = count_of(s["folds"], "evaluation.folds", 2);
        if (s.contains("samples")) c.samples = count_of(s["samples"], "evaluation.samples", 1);
        if (s.contains("alpha")) {
            c.significance = number_of(s["alpha"], "evaluation.alpha");
            if (!(c.significance > 0.0 && c.significance < 1.0)) {
                throw ConfigError("evaluation.alpha must lie in (0, 1)");
            }
        }
    }
    if (j.contains("output_dir")) c.output_dir = path_of(j["output_dir"], "output_dir", base);
    if (j.contains("seed")) c.seed = count_of(j["seed"], "seed");
    if (j.contains("threads")) c.threads = count_of(j["threads"], "threads", 1);

    if (std::find(c.metrics.begin(), c.metrics.end(), c.objective) == c.metrics.end()) {
        c.metrics.insert(c.metrics.begin(), c.objective);
    }
    for (const auto& [n, it] : c.settings) {
        SessionConfig s;
        s.per_iter = n;
        s.iterations = it;
        s.tail_depth = c.tail_depth;
        wrap("session.settings", [&] { s.validate(); return 0; });
    }
    if (!train_mode_given) {
        c.train.mode = c.representation == Representation::pv    ? TrainMode::pv_hdc
                       : c.representation == Representation::pvc ? TrainMode::pv_hdc_corrupted
                                                                  : TrainMode::skipgram;
    } else if ((c.representation == Representation::pv && c.train.mode != TrainMode::pv_hdc) ||
               (c.representation == Representation::pvc && c.train.mode != TrainMode::pv_hdc_corrupted)) {
        throw ConfigError(fmt::format("fusion.representation {} needs embeddings trained in mode {}",
                                      to_string(c.representation),
                                      c.representation == Representation::pv ? "pv" : "pvc"));
    }
    c.validate_grids();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return from_json(j, path.parent_path());
}

bool ExperimentConfig::needs_embeddings() const {
    return lambda_sf.has_value() || std::find(methods.begin(), methods.end(), Method::erm) != methods.end();
}

std::vector<Variant> variants(const ExperimentConfig& cfg) {
    std::vector<Variant> out;
    std::set<Method> bases;
    for (auto m : cfg.methods) {
        bases.insert(base_method(m));
    }
    for (auto b : bases) {
        out.push_back(Variant{std::string(to_string(b)), b, false});
    }
    for (auto m : cfg.methods) {
        out.push_back(Variant{std::string(to_string(m)), m, false});
        if (cfg.lambda_sf) {
            out.push_back(Variant{fmt::format("{}+{}", to_string(m), to_string(cfg.representation)), m, true});
        }
    }
    return out;
}

Grid variant_grid(const ExperimentConfig& cfg, const Variant& v) {
    Grid g;
    if (base_method(v.method) == Method::ql) {
        g["mu"] = cfg.mu;
    } else {
        g["k1"] = cfg.k1;
        g["b"] = cfg.b;
    }
    switch (v.method) {
        case Method::ql:
        case Method::bm25:
            break;
        case Method::rm3:
            g["m"] = cfg.m;
            g["alpha_interp"] = cfg.alpha_interp;
            break;
        case Method::distillation:
            g["m"] = cfg.m;
            g["alpha_interp"] = cfg.alpha_interp;
            g["lambda_mix"] = cfg.lambda_mix;
            g["lambda_nr"] = cfg.lambda_nr;
            break;
        case Method::erm:
            g["m"] = cfg.m;
            g["alpha_interp"] = cfg.alpha_interp;
            g["erm_lambda"] = cfg.erm_lambda;
            g["erm_a"] = cfg.erm_a;
            g["erm_c"] = cfg.erm_c;
            break;
        case Method::rocchio:
            g["m"] = cfg.m;
            g["rocchio_alpha"] = cfg.rocchio_alpha;
            g["rocchio_beta"] = cfg.rocchio_beta;
            g["rocchio_gamma"] = cfg.rocchio_gamma;
            break;
    }
    if (v.fused) {
        g["lambda_sf"] = *cfg.lambda_sf;
    }
    return g;
}

Workspace load_workspace(const ExperimentConfig& cfg) {
    Workspace ws;
    ws.collection = ingest_corpus(cfg.passages, cfg.tokenizer);
    ws.queries = load_queries(cfg.queries, cfg.tokenizer);
    ws.qrels = load_qrels(cfg.qrels);
    ws.index = Index::build(ws.collection);
    if (cfg.needs_embeddings()) {
        if (cfg.embedding_model) {
            ws.model = std::make_shared<const EmbeddingModel>(EmbeddingModel::load(*cfg.embedding_model));
        } else {
            auto train = cfg.train;
            train.seed = cfg.seed;
            train.threads = cfg.threads;
            logger().info("training {} embeddings ({} epochs)", to_string(train.mode), train.epochs);
            auto corpus = ws.collection.retokenized(TokenizerConfig::embedding_default());
            auto model = train_embeddings(corpus, train);
            fs::create_directories(cfg.output_dir);
            model.save(cfg.output_dir / "embeddings.bin");
            ws.model = std::make_shared<const EmbeddingModel>(std::move(model));
        }
        ws.semantic = std::make_unique<SemanticContext>(ws.model, ws.collection);
    }
    return ws;
}

namespace {

struct Configured {
    Engine engine;
    std::optional<FusionConfig> fusion;
};

/// Maps a grid point onto engine and fusion parameters and validates them.
Configured configure_params(const ExperimentConfig& cfg, const Variant& v, const GridPoint& p) {
    Configured c;
    c.engine.feedback.em_max_iters = cfg.em_max_iters;
    c.engine.feedback.em_tol = cfg.em_tol;
    c.engine.erm.k = cfg.erm_k;
    for (const auto& [name, value] : p) {
        if (name == "mu") c.engine.retrieval.mu = value;
        else if (name == "k1") c.engine.retrieval.k1 = value;
        else if (name == "b") c.engine.retrieval.b = value;
        else if (name == "m") c.engine.feedback.m = static_cast<std::size_t>(value);
        else if (name == "alpha_interp") c.engine.feedback.alpha_interp = value;
        else if (name == "lambda_mix") c.engine.feedback.lambda_mix = value;
        else if (name == "lambda_nr") c.engine.feedback.lambda_nr = value;
        else if (name == "rocchio_alpha") c.engine.feedback.rocchio_alpha = value;
        else if (name == "rocchio_beta") c.engine.feedback.rocchio_beta = value;
        else if (name == "rocchio_gamma") c.engine.feedback.rocchio_gamma = value;
        else if (name == "erm_lambda") c.engine.erm.lambda = value;
        else if (name == "erm_a") c.engine.erm.a = value;
        else if (name == "erm_c") c.engine.erm.c = value;
        else if (name == "lambda_sf") c.fusion = FusionConfig{value, cfg.representation};
    }
    try {
        c.engine.retrieval.validate();
        c.engine.feedback.validate();
        c.engine.erm.validate();
        if (c.fusion) c.fusion->validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", v.name, e.what()));
    }
    return c;
}

}  // namespace

void ExperimentConfig::validate_grids() const {
    for (const auto& v : variants(*this)) {
        for (const auto& p : expand_grid(variant_grid(*this, v))) {
            configure_params(*this, v, p);
        }
    }
}

namespace {

Configured configure(const ExperimentConfig& cfg, const Workspace& ws, const Variant& v, const GridPoint& p) {
    auto c = configure_params(cfg, v, p);
    c.engine.index = &ws.index;
    c.engine.semantic = ws.semantic.get();
    return c;
}

ordered_json point_json(const GridPoint& p) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : p) {
        j[k] = v;
    }
    return j;
}

std::vector<double> aligned(const MetricResult& r, std::span<const std::string> topics) {
    std::vector<double> out;
    out.reserve(topics.size());
    for (const auto& t : topics) {
        auto it = r.per_query.find(t);
        out.push_back(it == r.per_query.end() ? 0.0 : it->second);
    }
    return out;
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    return out;
}

/// Cross-validated outcome of one variant in one setting.
struct Outcome {
    Run run;
    std::vector<MetricResult> metrics;  ///< same order as cfg.metrics
    ordered_json chosen;
};

const MetricResult& metric_of(const ExperimentConfig& cfg, const Outcome& o, Metric m) {
    auto it = std::find(cfg.metrics.begin(), cfg.metrics.end(), m);
    return o.metrics[static_cast<std::size_t>(it - cfg.metrics.begin())];
}

/// Evaluates every grid point, picks one per fold and assembles the held-out run.
/// `produce` returns the run for a point on all topics; `finish` receives the
/// chosen point and the topics of its fold.
template <typename Produce, typename Finish>
Outcome tune(const ExperimentConfig& cfg, const Grid& grid, std::span<const std::string> topics,
             std::span<const std::string> groups, const Relevance& relevance, Produce&& produce, Finish&& finish) {
    const auto points = expand_grid(grid);
    std::vector<Run> runs;
    std::vector<std::vector<double>> scores;
    for (const auto& p : points) {
        runs.push_back(produce(p));
        scores.push_back(aligned(evaluate_run(runs.back(), relevance, cfg.objective), topics));
    }
    const auto cv = cross_validate(scores, cfg.folds, cfg.seed, groups);
    Outcome o;
    o.chosen = ordered_json::array();
    for (std::size_t f = 0; f < cv.chosen.size(); ++f) {
        std::vector<std::string> fold_topics;
        for (std::size_t t = 0; t < topics.size(); ++t) {
            if (cv.fold_of_topic[t] == f) {
                fold_topics.push_back(topics[t]);
                auto it = runs[cv.chosen[f]].find(topics[t]);
                if (it != runs[cv.chosen[f]].end()) {
                    o.run[topics[t]] = it->second;
                }
            }
        }
        o.chosen.push_back({{"fold", f}, {"params", point_json(points[cv.chosen[f]])}, {"topics", fold_topics.size()}});
        finish(points[cv.chosen[f]], fold_topics);
    }
    for (auto m : cfg.metrics) {
        o.metrics.push_back(evaluate_run(o.run, relevance, m));
    }
    return o;
}

void write_run(const fs::path& path, const Run& run, std::string_view tag) {
    auto out = open_out(path);
    for (const auto& [topic, ids] : run) {
        write_trec_run(out, topic, ids, tag);
    }
}

std::string file_stem(std::string_view variant, std::string_view setting) {
    std::string s(variant);
    std::replace(s.begin(), s.end(), '+', '_');
    return setting.empty() ? s : fmt::format("{}_{}", s, setting);
}

std::size_t worker_count(const ExperimentConfig& cfg) {
    return std::max<std::size_t>(1, cfg.threads);
}

}  // namespace

void run_irf_experiment(const ExperimentConfig& cfg, const Workspace& ws) {
    std::vector<Query> judged;
    for (const auto& q : ws.queries) {
        if (ws.qrels.has_query(q.query_id)) {
            judged.push_back(q);
        } else {
            logger().warn("query {} has no judgments; skipped", q.query_id);
        }
    }
    std::vector<std::string> topics;
    for (const auto& q : judged) {
        topics.push_back(q.query_id);
    }
    std::sort(topics.begin(), topics.end());
    if (topics.size() < cfg.folds) {
        throw InputError(fmt::format("{} judged queries cannot fill {} folds", topics.size(), cfg.folds));
    }
    const auto relevance = relevance_from_qrels(ws.qrels);
    const auto vars = variants(cfg);
    const fs::path out = cfg.output_dir;
    fs::create_directories(out);

    std::vector<std::string> setting_labels;
    for (const auto& [n, it] : cfg.settings) {
        setting_labels.push_back(fmt::format("{}x{}", n, it));
    }

    // outcome[variant][setting]; baselines are computed once and shared.
    std::vector<std::vector<Outcome>> outcome(vars.size());
    ordered_json chosen = ordered_json::object();
    std::ofstream csv = open_out(out / "per_query.csv");
    csv << "variant,setting,topic,metric,value\n";
    auto emit_csv = [&](const std::string& variant, const std::string& setting, const Outcome& o) {
        for (const auto& r : o.metrics) {
            for (const auto& [topic, v] : r.per_query) {
                csv << fmt::format("{},{},{},{},{:.6f}\n", variant, setting, topic, to_string(r.metric), v);
            }
        }
    };

    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        const auto& v = vars[vi];
        const Grid grid = variant_grid(cfg, v);
        const bool baseline = v.method == Method::ql || v.method == Method::bm25;
        const std::size_t runs_needed = baseline ? 1 : cfg.settings.size();
        for (std::size_t si = 0; si < runs_needed; ++si) {
            SessionConfig sc;
            sc.per_iter = cfg.settings[si].first;
            sc.iterations = cfg.settings[si].second;
            sc.method = v.method;
            sc.tail_depth = cfg.tail_depth;
            const std::string label = baseline ? "initial" : setting_labels[si];
            logger().info("{} {}: {} grid points", v.name, label, expand_grid(grid).size());
            std::vector<SessionResult> traces;
            auto produce = [&](const GridPoint& p) {
                auto c = configure(cfg, ws, v, p);
                auto s = sc;
                s.fusion = c.fusion;
                auto sessions = run_sessions(judged, ws.qrels, s, c.engine, worker_count(cfg));
                return to_run(sessions, ws.index);
            };
            auto finish = [&](const GridPoint& p, std::span<const std::string> fold_topics) {
                auto c = configure(cfg, ws, v, p);
                auto s = sc;
                s.fusion = c.fusion;
                std::vector<Query> subset;
                for (const auto& q : judged) {
                    if (std::binary_search(fold_topics.begin(), fold_topics.end(), q.query_id)) {
                        subset.push_back(q);
                    }
                }
                auto sessions = run_sessions(subset, ws.qrels, s, c.engine, worker_count(cfg));
                std::move(sessions.begin(), sessions.end(), std::back_inserter(traces));
            };
            Outcome o = tune(cfg, grid, topics, {}, relevance, produce, finish);
            std::sort(traces.begin(), traces.end(),
                      [](const SessionResult& a, const SessionResult& b) { return a.query_id < b.query_id; });
            const auto stem = file_stem(v.name, label);
            write_run(out / "runs" / (stem + ".run"), o.run, v.name);
            {
                auto tf = open_out(out / "traces" / (stem + ".jsonl"));
                write_session_traces(tf, traces, ws.index);
            }
            emit_csv(v.name, label, o);
            chosen[v.name][label] = o.chosen;
            outcome[vi].push_back(std::move(o));
        }
    }

    auto find_variant = [&](std::string_view name) -> std::size_t {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == name) return i;
        }
        return vars.size();
    };
    auto at = [&](std::size_t vi, std::size_t si) -> const Outcome& {
        return outcome[vi].size() == 1 ? outcome[vi][0] : outcome[vi][si];
    };

    std::ofstream summary = open_out(out / "summary.txt");
    std::vector<std::string> rows;
    for (const auto& v : vars) {
        rows.push_back(v.name);
    }
    ordered_json pvalues = ordered_json::object();
    for (auto metric : cfg.metrics) {
        std::vector<std::vector<std::string>> cells(vars.size());
        for (std::size_t vi = 0; vi < vars.size(); ++vi) {
            const auto& v = vars[vi];
            const std::size_t base = find_variant(to_string(base_method(v.method)));
            const std::size_t plain = v.fused ? find_variant(to_string(v.method)) : vars.size();
            for (std::size_t si = 0; si < cfg.settings.size(); ++si) {
                const auto& r = metric_of(cfg, at(vi, si), metric);
                std::string text = cell(r.mean);
                if (base != vi) {
                    const double p = fisher_randomization(aligned(r, topics),
                                                          aligned(metric_of(cfg, at(base, si), metric), topics),
                                                          cfg.samples, cfg.seed);
                    pvalues[std::string(to_string(metric))][v.name][setting_labels[si]]["vs_base"] = p;
                    if (p < cfg.significance && r.mean > metric_of(cfg, at(base, si), metric).mean) text += "*";
                }
                if (plain < vars.size()) {
                    const double p = fisher_randomization(aligned(r, topics),
                                                          aligned(metric_of(cfg, at(plain, si), metric), topics),
                                                          cfg.samples, cfg.seed);
                    pvalues[std::string(to_string(metric))][v.name][setting_labels[si]]["vs_unfused"] = p;
                    if (p < cfg.significance && r.mean > metric_of(cfg, at(plain, si), metric).mean) text += "+";
                }
                cells[vi].push_back(text);
            }
        }
        write_summary_table(summary, fmt::format("{} (N x iterations)", to_string(metric)), rows, setting_labels,
                            cells);
        summary << '\n';
    }
    summary << fmt::format("* p < {} against the base retrieval; + p < {} against the unfused method "
                           "(Fisher randomization, {} topics)\n",
                           format_value(cfg.significance), format_value(cfg.significance), topics.size());
    {
        auto cf = open_out(out / "chosen_params.json");
        cf << chosen.dump(2) << '\n';
        auto pf = open_out(out / "significance.json");
        pf << pvalues.dump(2) << '\n';
    }
}

void run_onerel_experiment(const ExperimentConfig& cfg, const Workspace& ws) {
    const auto vars = variants(cfg);
    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    const auto relevance_q = relevance_from_qrels(ws.qrels);

    // Topic ids and their query groups come from the first variant; every
    // variant draws the same fed passages because draws depend only on the seed.
    std::vector<std::string> topics, groups;
    Relevance relevance;
    std::vector<std::vector<std::string>> cells(vars.size());
    std::vector<std::string> rows;
    ordered_json chosen = ordered_json::object();
    std::vector<std::vector<MetricResult>> results(vars.size());

    std::ofstream csv = open_out(out / "onerel_per_query.csv");
    csv << "variant,topic,metric,value\n";

    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        const auto& v = vars[vi];
        rows.push_back(v.name);
        auto produce = [&](const GridPoint& p) {
            auto c = configure(cfg, ws, v, p);
            auto list = run_one_rel_batch(ws.queries, ws.qrels, cfg.draws, cfg.seed, c.engine, v.method, c.fusion,
                                          cfg.onerel_depth, worker_count(cfg));
            if (topics.empty()) {
                for (const auto& t : list) {
                    topics.push_back(t.topic_id);
                }
                std::sort(topics.begin(), topics.end());
                for (const auto& t : topics) {
                    const std::string qid = t.substr(0, t.rfind('#'));
                    groups.push_back(qid);
                    // The fed passage is excluded from the ranking and from
                    // the relevant set of its topic.
                    relevance[t] = relevance_q.at(qid);
                }
                for (const auto& t : list) {
                    relevance[t.topic_id].erase(ws.index.passage_id(t.fed));
                }
            }
            return to_run(list, ws.index);
        };
        auto grid = variant_grid(cfg, v);
        auto probe = [&]() {
            if (topics.empty()) {
                produce(expand_grid(grid).front());
                if (topics.empty()) {
                    throw InputError("no query has two or more relevant passages");
                }
            }
        };
        probe();
        Outcome o = tune(cfg, grid, topics, groups, relevance, produce, [](const GridPoint&, auto) {});
        write_run(out / "runs" / (file_stem(v.name, "onerel") + ".run"), o.run, v.name);
        for (const auto& r : o.metrics) {
            for (const auto& [topic, value] : r.per_query) {
                csv << fmt::format("{},{},{},{:.6f}\n", v.name, topic, to_string(r.metric), value);
            }
        }
        chosen[v.name] = o.chosen;
        results[vi] = o.metrics;
    }

    ordered_json pvalues = ordered_json::object();
    std::vector<std::string> columns;
    for (auto m : cfg.metrics) {
        columns.emplace_back(to_string(m));
    }
    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        const auto& v = vars[vi];
        std::size_t base = vars.size();
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name == to_string(base_method(v.method))) base = i;
        }
        for (std::size_t mi = 0; mi < cfg.metrics.size(); ++mi) {
            std::string text = cell(results[vi][mi].mean);
            if (base != vi && base < vars.size()) {
                const double p = fisher_randomization(aligned(results[vi][mi], topics),
                                                      aligned(results[base][mi], topics), cfg.samples, cfg.seed);
                pvalues[columns[mi]][v.name] = p;
                if (p < cfg.significance && results[vi][mi].mean > results[base][mi].mean) text += "*";
            }
            cells[vi].push_back(text);
        }
    }
    std::ofstream summary = open_out(out / "onerel_summary.txt");
    write_summary_table(summary, fmt::format("one relevant passage ({} draws per query)", cfg.draws), rows, columns,
                        cells);
    summary << fmt::format("* p < {} against the base retrieval (Fisher randomization, {} topics)\n",
                           format_value(cfg.significance), topics.size());
    auto cf = open_out(out / "onerel_chosen_params.json");
    cf << chosen.dump(2) << '\n';
    auto pf = open_out(out / "onerel_significance.json");
    pf << pvalues.dump(2) << '\n';
}

}  // namespace irf::cli
