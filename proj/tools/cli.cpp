#include "cli.hpp"

#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "experiment.hpp"
#include "irf/error.hpp"
#include "irf/log.hpp"
#include "irf/synthgen.hpp"

namespace irf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Options shared by every command.
struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    std::string output_dir;
    std::optional<std::size_t> threads;
    std::string log_level = "warn";

    std::size_t workers(std::size_t configured) const {
        if (deterministic) return 1;
        return threads ? *threads : configured;
    }
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "JSON configuration file");
    if (config_required) {
        opt->required();
    }
    cmd->add_option("--seed", c.seed, "override the configured seed");
    cmd->add_flag("--deterministic", c.deterministic, "single worker; byte-identical outputs for a given seed");
    cmd->add_option("--output-dir", c.output_dir, "override the output directory");
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off");
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::ofstream open_file(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    return out;
}

TokenizerConfig tokenizer_for(const std::string& stemming, bool keep_stopwords, TokenizerConfig base) {
    if (!stemming.empty()) {
        base.stemming = parse_stemming(stemming);
    }
    if (keep_stopwords) {
        base.stopwords.clear();
    }
    return base;
}

ExperimentConfig experiment_config(const Common& c) {
    auto cfg = ExperimentConfig::load(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    cfg.threads = c.workers(cfg.threads);
    return cfg;
}

void save_effective_config(const ExperimentConfig& cfg, const Common& c) {
    fs::create_directories(cfg.output_dir);
    auto j = read_json(c.config);
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir.string();
    auto out = open_file(cfg.output_dir / "config.json");
    out << j.dump(2) << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Iterative relevance feedback experiments over answer passages", "irf"};
    app.require_subcommand(1);

    Common common;

    // build-index
    auto* build = app.add_subcommand("build-index", "tokenize a corpus and write an index snapshot");
    std::string corpus_path, out_path, stemming;
    bool keep_stopwords = false;
    build->add_option("--corpus", corpus_path, "corpus JSONL (id, doc_id, text)")->required();
    build->add_option("--out", out_path, "snapshot path")->required();
    build->add_option("--stemming", stemming, "none, s or porter (default s)");
    build->add_flag("--keep-stopwords", keep_stopwords, "do not remove stopwords");
    add_common(build, common, false);

    // train-embeddings
    auto* train = app.add_subcommand("train-embeddings", "train word and passage embeddings");
    std::string mode;
    train->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    train->add_option("--mode", mode, "skipgram, pv or pvc (default pvc)");
    train->add_option("--out", out_path, "model path")->required();
    add_common(train, common, false);

    // run-irf / run-onerel
    auto* irf_cmd = app.add_subcommand("run-irf", "iterative feedback sessions with cross-validated parameters");
    add_common(irf_cmd, common, true);
    auto* onerel = app.add_subcommand("run-onerel", "one-relevant-passage feedback experiment");
    add_common(onerel, common, true);

    // eval
    auto* eval = app.add_subcommand("eval", "score a TREC run against qrels");
    std::string run_path, run_b_path, qrels_path;
    std::vector<std::string> metric_names{"map100", "ndcg20", "p1", "mrr"};
    eval->add_option("--run", run_path, "TREC run file")->required();
    eval->add_option("--qrels", qrels_path, "TREC qrels")->required();
    eval->add_option("--metrics", metric_names, "metrics to report");
    add_common(eval, common, false);

    // significance
    auto* sig = app.add_subcommand("significance", "paired Fisher randomization test between two runs");
    std::string metric_name = "map100";
    std::size_t samples = 100000;
    std::string method_name = "auto";
    sig->add_option("--run-a", run_path, "first run")->required();
    sig->add_option("--run-b", run_b_path, "second run")->required();
    sig->add_option("--qrels", qrels_path, "TREC qrels")->required();
    sig->add_option("--metric", metric_name, "metric (default map100)");
    sig->add_option("--samples", samples, "Monte-Carlo samples (default 100000)")->check(CLI::PositiveNumber);
    sig->add_option("--method", method_name, "auto, exhaustive or monte-carlo")
        ->check(CLI::IsMember({"auto", "exhaustive", "monte-carlo"}));
    add_common(sig, common, false);

    // gen-synth
    auto* synth = app.add_subcommand("gen-synth", "write a planted-topic synthetic collection");
    add_common(synth, common, false);

    // segment
    auto* segment = app.add_subcommand("segment", "cut documents into 2-3 sentence passages");
    std::string docs_path;
    segment->add_option("--docs", docs_path, "documents JSONL (id, text)")->required();
    segment->add_option("--out", out_path, "corpus JSONL to write")->required();
    add_common(segment, common, false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << '\n';
        if (app.get_subcommands().empty()) {
            err << "run with --help for usage\n";
        }
        return 2;
    }

    try {
        logger().set_level(spdlog::level::from_str(common.log_level));

        if (*build) {
            auto tok = tokenizer_for(stemming, keep_stopwords, TokenizerConfig::retrieval_default());
            auto collection = ingest_corpus(corpus_path, tok);
            auto index = Index::build(collection);
            index.save(out_path);
            out << fmt::format("indexed {} passages, {} terms -> {}\n", index.passage_count(), index.term_count(),
                               out_path);
        } else if (*train) {
            TrainConfig cfg;
            cfg.mode = TrainMode::pv_hdc_corrupted;
            if (!common.config.empty()) {
                auto j = read_json(common.config);
                try {
                    cfg = TrainConfig::from_json(j);
                } catch (const std::exception& e) {
                    throw ConfigError(fmt::format("{}: {}", common.config, e.what()));
                }
                if (!j.contains("mode")) cfg.mode = TrainMode::pv_hdc_corrupted;
            }
            if (!mode.empty()) cfg.mode = parse_train_mode(mode);
            if (common.seed) cfg.seed = *common.seed;
            cfg.threads = common.workers(cfg.threads);
            cfg.validate();
            auto collection = ingest_corpus(corpus_path, TokenizerConfig::embedding_default());
            auto model = train_embeddings(collection, cfg);
            fs::path target = out_path;
            if (!common.output_dir.empty() && target.is_relative()) {
                target = fs::path(common.output_dir) / target;
            }
            if (target.has_parent_path()) fs::create_directories(target.parent_path());
            model.save(target);
            out << fmt::format("trained {} model: {} words, {} passage vectors, dim {}, final loss {:.4f} -> {}\n",
                               to_string(model.mode()), model.vocab_size(), model.passage_count(), model.dim(),
                               model.epoch_loss().empty() ? 0.0 : model.epoch_loss().back(), target.string());
        } else if (*irf_cmd || *onerel) {
            auto cfg = experiment_config(common);
            auto ws = load_workspace(cfg);
            save_effective_config(cfg, common);
            if (*irf_cmd) {
                run_irf_experiment(cfg, ws);
                std::ifstream summary(cfg.output_dir / "summary.txt");
                out << summary.rdbuf();
            } else {
                run_onerel_experiment(cfg, ws);
                std::ifstream summary(cfg.output_dir / "onerel_summary.txt");
                out << summary.rdbuf();
            }
        } else if (*eval) {
            auto run = load_trec_run(run_path);
            auto relevance = relevance_from_qrels(load_qrels(qrels_path));
            std::vector<MetricResult> results;
            for (const auto& name : metric_names) {
                results.push_back(evaluate_run(run, relevance, parse_metric(name)));
            }
            for (const auto& r : results) {
                out << fmt::format("{:<8} all {:.4f}\n", to_string(r.metric), r.mean);
            }
            if (!common.output_dir.empty()) {
                auto csv = open_file(fs::path(common.output_dir) / "per_query.csv");
                write_per_query_csv(csv, results);
            }
        } else if (*sig) {
            const auto metric = parse_metric(metric_name);
            auto relevance = relevance_from_qrels(load_qrels(qrels_path));
            auto a = evaluate_run(load_trec_run(run_path), relevance, metric);
            auto b = evaluate_run(load_trec_run(run_b_path), relevance, metric);
            if (a.per_query.size() != b.per_query.size()) {
                throw InputError("runs cover different topics");
            }
            for (const auto& [topic, v] : a.per_query) {
                if (!b.per_query.contains(topic)) {
                    throw InputError("topic " + topic + " is missing from " + run_b_path);
                }
            }
            const auto method = method_name == "exhaustive"    ? FisherMethod::exhaustive
                                : method_name == "monte-carlo" ? FisherMethod::monte_carlo
                                                               : FisherMethod::automatic;
            const double p = fisher_randomization(a, b, samples, common.seed.value_or(1), method);
            out << fmt::format("{} a={:.4f} b={:.4f} topics={} p={:.6f}\n", to_string(metric), a.mean, b.mean,
                               a.per_query.size(), p);
        } else if (*synth) {
            GeneratorConfig cfg;
            if (!common.config.empty()) {
                try {
                    cfg = GeneratorConfig::from_json(read_json(common.config));
                } catch (const ConfigError&) {
                    throw;
                } catch (const std::exception& e) {
                    throw ConfigError(fmt::format("{}: {}", common.config, e.what()));
                }
            }
            if (common.seed) cfg.seed = *common.seed;
            try {
                cfg.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            const fs::path dir = common.output_dir.empty() ? fs::path("synthetic") : fs::path(common.output_dir);
            auto data = generate(cfg);
            write_synthetic(dir, data);
            auto meta = open_file(dir / "generator.json");
            meta << cfg.to_json().dump(2) << '\n';
            out << fmt::format("wrote {} passages, {} queries, {} judgments -> {}\n", data.collection.size(),
                               data.queries.size(), data.qrels.size(), dir.string());
        } else if (*segment) {
            std::ifstream in(docs_path);
            if (!in) {
                throw InputError("cannot open " + docs_path);
            }
            const std::uint64_t seed = common.seed.value_or(1);
            std::vector<Passage> passages;
            std::string line;
            std::size_t lineno = 0, docs = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::exception& e) {
                    throw ParseError(docs_path, lineno, e.what());
                }
                if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j["id"].is_string() ||
                    !j["text"].is_string()) {
                    throw ParseError(docs_path, lineno, "expected string fields id and text");
                }
                auto parts = segment_document(j["text"].get<std::string>(), seed + docs,
                                              j["id"].get<std::string>());
                std::move(parts.begin(), parts.end(), std::back_inserter(passages));
                ++docs;
            }
            PassageCollection collection(std::move(passages));
            fs::path target = out_path;
            if (!common.output_dir.empty() && target.is_relative()) {
                target = fs::path(common.output_dir) / target;
            }
            if (target.has_parent_path()) fs::create_directories(target.parent_path());
            write_corpus(target, collection);
            out << fmt::format("{} documents -> {} passages -> {}\n", docs, collection.size(), target.string());
        }
        return 0;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace irf::cli
