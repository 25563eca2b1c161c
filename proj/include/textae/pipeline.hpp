#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "textae/autoencoder.hpp"
#include "textae/classifiers.hpp"
#include "textae/corpus.hpp"
#include "textae/error.hpp"
#include "textae/eval.hpp"
#include "textae/infoplane.hpp"
#include "textae/matrix.hpp"
#include "textae/pca.hpp"
#include "textae/rng.hpp"
#include "textae/tfidf.hpp"

namespace textae {

using json = nlohmann::json;

enum class DataKind { csv, synth };
enum class ReducerKind { none, pca, ae, lae, sae };
enum class EvalMode { split, cv, learning_curve };

inline const char* reducer_name(ReducerKind k) {
    switch (k) {
        case ReducerKind::none: return "none";
        case ReducerKind::pca: return "pca";
        case ReducerKind::ae: return "ae";
        case ReducerKind::lae: return "lae";
        case ReducerKind::sae: return "sae";
    }
    throw ConfigError("unknown reducer kind");
}

struct DataConfig {
    DataKind kind = DataKind::synth;
    std::string path;  // csv only
    SynthParams synth;
};

struct VectorizerConfig {
    bool smooth_idf = true;
    Norm norm = Norm::l2;
    int ngram_min = 1;
    int ngram_max = 2;
};

struct ReducerConfig {
    ReducerKind kind = ReducerKind::none;
    TrainConfig train;                    // ae/lae/sae (latent_dim = bottleneck; pca reuses it)
    std::vector<std::size_t> sae_stages;  // bottleneck widths, strictly decreasing
    std::size_t fine_tune_epochs = 0;
};

struct EvalPlan {
    EvalMode mode = EvalMode::cv;
    std::size_t k = 5;
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
    std::vector<std::size_t> train_sizes;
};

struct InfoPlaneConfig {
    bool enabled = false;
    std::size_t n_bins = 30;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    VectorizerConfig vectorizer;
    std::size_t select_k = 0;  // 0 = no selection
    ReducerConfig reducer;
    ClassifierConfig classifier;
    EvalPlan eval;
    InfoPlaneConfig infoplane;
};

// ---- config loading ----

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T def) {
    if (!j.contains(key)) return def;
    return j.at(key).get<T>();
}

inline void require_object(const json& j, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& root) try {
    detail::require_object(root, "config");
    // A run summary embeds the resolved config under "config"; accept both.
    const json& j = root.contains("config") ? root.at("config") : root;
    detail::require_object(j, "config");

    if (detail::get_or<int>(j, "schema_version", 1) != 1)
        throw ConfigError("unsupported schema_version");
    if (!j.contains("seed")) throw ConfigError("seed is mandatory");

    RunConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("data")) {
        const json& d = j.at("data");
        detail::require_object(d, "data");
        const auto kind = detail::get_or<std::string>(d, "kind", "synth");
        if (kind == "csv") {
            cfg.data.kind = DataKind::csv;
            if (!d.contains("path")) throw ConfigError("data.path required for csv input");
            cfg.data.path = d.at("path").get<std::string>();
        } else if (kind == "synth") {
            cfg.data.kind = DataKind::synth;
            auto& s = cfg.data.synth;
            s.seed = detail::get_or<std::uint64_t>(d, "seed", derive_seed(cfg.seed, "data"));
            s.n_docs = detail::get_or<std::size_t>(d, "n_docs", s.n_docs);
            s.vocab_size = detail::get_or<std::size_t>(d, "vocab_size", s.vocab_size);
            s.class_balance = detail::get_or<double>(d, "class_balance", s.class_balance);
            s.nonlinearity = detail::get_or<bool>(d, "nonlinearity", s.nonlinearity);
        } else {
            throw ConfigError("data.kind must be 'csv' or 'synth'");
        }
    } else {
        cfg.data.synth.seed = derive_seed(cfg.seed, "data");
    }

    if (j.contains("vectorizer")) {
        const json& v = j.at("vectorizer");
        detail::require_object(v, "vectorizer");
        cfg.vectorizer.smooth_idf = detail::get_or<bool>(v, "smooth_idf", true);
        const auto norm = detail::get_or<std::string>(v, "norm", "l2");
        if (norm == "l2")
            cfg.vectorizer.norm = Norm::l2;
        else if (norm == "none")
            cfg.vectorizer.norm = Norm::none;
        else
            throw ConfigError("vectorizer.norm must be 'l2' or 'none'");
        cfg.vectorizer.ngram_min = detail::get_or<int>(v, "ngram_min", 1);
        cfg.vectorizer.ngram_max = detail::get_or<int>(v, "ngram_max", 2);
    }

    cfg.select_k = detail::get_or<std::size_t>(j, "select_k", 0);

    if (j.contains("reducer")) {
        const json& r = j.at("reducer");
        detail::require_object(r, "reducer");
        const auto kind = detail::get_or<std::string>(r, "kind", "none");
        if (kind == "none")
            cfg.reducer.kind = ReducerKind::none;
        else if (kind == "pca")
            cfg.reducer.kind = ReducerKind::pca;
        else if (kind == "ae")
            cfg.reducer.kind = ReducerKind::ae;
        else if (kind == "lae")
            cfg.reducer.kind = ReducerKind::lae;
        else if (kind == "sae")
            cfg.reducer.kind = ReducerKind::sae;
        else
            throw ConfigError("reducer.kind must be one of none|pca|ae|lae|sae");

        TrainConfig& t = cfg.reducer.train;
        t.latent_dim = detail::get_or<std::size_t>(r, "latent_dim", t.latent_dim);
        if (r.contains("train")) {
            const json& tr = r.at("train");
            detail::require_object(tr, "reducer.train");
            t.hidden_layers = detail::get_or<std::size_t>(tr, "hidden_layers", t.hidden_layers);
            t.neurons = detail::get_or<std::size_t>(tr, "neurons", t.neurons);
            t.latent_dim = detail::get_or<std::size_t>(tr, "latent_dim", t.latent_dim);
            t.activation =
                activation_from_name(detail::get_or<std::string>(tr, "activation", "sigmoid"));
            t.decoder_activation = activation_from_name(
                detail::get_or<std::string>(tr, "decoder_activation", "sigmoid"));
            t.tied = detail::get_or<bool>(tr, "tied", true);
            const auto opt = detail::get_or<std::string>(tr, "optimizer", "adam");
            if (opt == "sgd")
                t.optimizer = Optimizer::sgd;
            else if (opt == "adam")
                t.optimizer = Optimizer::adam;
            else
                throw ConfigError("optimizer must be 'sgd' or 'adam'");
            t.learning_rate = detail::get_or<double>(tr, "learning_rate", t.learning_rate);
            t.beta1 = detail::get_or<double>(tr, "beta1", t.beta1);
            t.beta2 = detail::get_or<double>(tr, "beta2", t.beta2);
            t.epsilon = detail::get_or<double>(tr, "epsilon", t.epsilon);
            t.weight_decay = detail::get_or<double>(tr, "weight_decay", t.weight_decay);
            t.epochs = detail::get_or<std::size_t>(tr, "epochs", t.epochs);
            t.batch_size = detail::get_or<std::size_t>(tr, "batch_size", t.batch_size);
        }
        if (cfg.reducer.kind == ReducerKind::lae) {
            t.activation = Activation::linear;
            t.decoder_activation = Activation::linear;
        }
        cfg.reducer.sae_stages =
            detail::get_or<std::vector<std::size_t>>(r, "sae_stages", {});
        cfg.reducer.fine_tune_epochs = detail::get_or<std::size_t>(r, "fine_tune_epochs", 0);
        if (cfg.reducer.kind == ReducerKind::sae && cfg.reducer.sae_stages.empty())
            throw ConfigError("reducer.sae_stages required for kind 'sae'");
        if (cfg.reducer.kind != ReducerKind::none) t.validate();
    }

    if (j.contains("classifier")) {
        const json& c = j.at("classifier");
        detail::require_object(c, "classifier");
        cfg.classifier.kind =
            classifier_from_name(detail::get_or<std::string>(c, "kind", "logreg"));
        cfg.classifier.l2_c = detail::get_or<double>(c, "l2_c", cfg.classifier.l2_c);
        cfg.classifier.logreg_iters =
            detail::get_or<std::size_t>(c, "logreg_iters", cfg.classifier.logreg_iters);
        cfg.classifier.logreg_lr = detail::get_or<double>(c, "logreg_lr", cfg.classifier.logreg_lr);
        cfg.classifier.alpha = detail::get_or<double>(c, "alpha", cfg.classifier.alpha);
        cfg.classifier.var_floor = detail::get_or<double>(c, "var_floor", cfg.classifier.var_floor);
        cfg.classifier.hidden_units =
            detail::get_or<std::size_t>(c, "hidden_units", cfg.classifier.hidden_units);
        cfg.classifier.epochs = detail::get_or<std::size_t>(c, "epochs", cfg.classifier.epochs);
        cfg.classifier.batch_size =
            detail::get_or<std::size_t>(c, "batch_size", cfg.classifier.batch_size);
        cfg.classifier.mlp_lr = detail::get_or<double>(c, "mlp_lr", cfg.classifier.mlp_lr);
        cfg.classifier.validate();
    }

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        detail::require_object(e, "eval");
        const auto mode = detail::get_or<std::string>(e, "mode", "cv");
        if (mode == "split")
            cfg.eval.mode = EvalMode::split;
        else if (mode == "cv")
            cfg.eval.mode = EvalMode::cv;
        else if (mode == "learning_curve")
            cfg.eval.mode = EvalMode::learning_curve;
        else
            throw ConfigError("eval.mode must be split|cv|learning_curve");
        cfg.eval.k = detail::get_or<std::size_t>(e, "k", 5);
        if (e.contains("ratios")) {
            const auto r = e.at("ratios").get<std::vector<double>>();
            if (r.size() != 3) throw ConfigError("eval.ratios must have 3 entries");
            cfg.eval.ratios = {r[0], r[1], r[2]};
        }
        cfg.eval.train_sizes = detail::get_or<std::vector<std::size_t>>(e, "train_sizes", {});
        if (cfg.eval.mode == EvalMode::learning_curve && cfg.eval.train_sizes.empty())
            throw ConfigError("eval.train_sizes required for learning_curve mode");
        if (cfg.eval.mode == EvalMode::cv && cfg.eval.k < 2)
            throw ConfigError("eval.k must be at least 2");
    }

    if (j.contains("infoplane")) {
        const json& ip = j.at("infoplane");
        detail::require_object(ip, "infoplane");
        cfg.infoplane.enabled = detail::get_or<bool>(ip, "enabled", false);
        cfg.infoplane.n_bins = detail::get_or<std::size_t>(ip, "n_bins", 30);
        if (cfg.infoplane.enabled && cfg.infoplane.n_bins < 2)
            throw ConfigError("infoplane.n_bins must be at least 2");
        if (cfg.infoplane.enabled &&
            (cfg.reducer.kind != ReducerKind::ae && cfg.reducer.kind != ReducerKind::lae))
            throw ConfigError("infoplane requires reducer kind 'ae' or 'lae'");
    }
    return cfg;
} catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
}

// Every effective parameter, defaults included, so the summary replays the
// run exactly.
inline json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["seed"] = cfg.seed;
    json d;
    if (cfg.data.kind == DataKind::csv) {
        d["kind"] = "csv";
        d["path"] = cfg.data.path;
    } else {
        d["kind"] = "synth";
        d["seed"] = cfg.data.synth.seed;
        d["n_docs"] = cfg.data.synth.n_docs;
        d["vocab_size"] = cfg.data.synth.vocab_size;
        d["class_balance"] = cfg.data.synth.class_balance;
        d["nonlinearity"] = cfg.data.synth.nonlinearity;
    }
    j["data"] = d;
    j["vectorizer"] = {{"smooth_idf", cfg.vectorizer.smooth_idf},
                       {"norm", cfg.vectorizer.norm == Norm::l2 ? "l2" : "none"},
                       {"ngram_min", cfg.vectorizer.ngram_min},
                       {"ngram_max", cfg.vectorizer.ngram_max}};
    j["select_k"] = cfg.select_k;
    json r;
    r["kind"] = reducer_name(cfg.reducer.kind);
    r["latent_dim"] = cfg.reducer.train.latent_dim;
    r["train"] = {{"hidden_layers", cfg.reducer.train.hidden_layers},
                  {"neurons", cfg.reducer.train.neurons},
                  {"latent_dim", cfg.reducer.train.latent_dim},
                  {"activation", activation_name(cfg.reducer.train.activation)},
                  {"decoder_activation", activation_name(cfg.reducer.train.decoder_activation)},
                  {"tied", cfg.reducer.train.tied},
                  {"optimizer", cfg.reducer.train.optimizer == Optimizer::sgd ? "sgd" : "adam"},
                  {"learning_rate", cfg.reducer.train.learning_rate},
                  {"beta1", cfg.reducer.train.beta1},
                  {"beta2", cfg.reducer.train.beta2},
                  {"epsilon", cfg.reducer.train.epsilon},
                  {"weight_decay", cfg.reducer.train.weight_decay},
                  {"epochs", cfg.reducer.train.epochs},
                  {"batch_size", cfg.reducer.train.batch_size}};
    r["sae_stages"] = cfg.reducer.sae_stages;
    r["fine_tune_epochs"] = cfg.reducer.fine_tune_epochs;
    j["reducer"] = r;
    j["classifier"] = {{"kind", classifier_name(cfg.classifier.kind)},
                       {"l2_c", cfg.classifier.l2_c},
                       {"logreg_iters", cfg.classifier.logreg_iters},
                       {"logreg_lr", cfg.classifier.logreg_lr},
                       {"alpha", cfg.classifier.alpha},
                       {"var_floor", cfg.classifier.var_floor},
                       {"hidden_units", cfg.classifier.hidden_units},
                       {"epochs", cfg.classifier.epochs},
                       {"batch_size", cfg.classifier.batch_size},
                       {"mlp_lr", cfg.classifier.mlp_lr}};
    json e;
    e["mode"] = cfg.eval.mode == EvalMode::split
                    ? "split"
                    : (cfg.eval.mode == EvalMode::cv ? "cv" : "learning_curve");
    e["k"] = cfg.eval.k;
    e["ratios"] = {cfg.eval.ratios[0], cfg.eval.ratios[1], cfg.eval.ratios[2]};
    e["train_sizes"] = cfg.eval.train_sizes;
    j["eval"] = e;
    j["infoplane"] = {{"enabled", cfg.infoplane.enabled}, {"n_bins", cfg.infoplane.n_bins}};
    return j;
}

// ---- file helpers ----

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << is.rdbuf();
    if (is.bad()) throw IoError("read failed on '" + path + "'");
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw IoError("write failed on '" + path + "'");
}

inline std::string fingerprint_hex(const std::string& bytes) {
    const std::uint64_t h = fnv1a64(bytes);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- fitted pipeline ----

// One fitted instance of tf-idf -> selection -> reduction -> classifier.
// Everything here was fitted on training rows only; transforming held-out
// rows uses the frozen statistics.
struct FittedPipeline {
    TfidfModel tfidf;
    std::optional<std::vector<std::size_t>> keep;
    ReducerKind reducer = ReducerKind::none;
    std::optional<PcaModel> pca;
    std::optional<AutoencoderModel> ae;
    std::optional<TrainTrace> trace;
    ClassifierModel clf;

    DenseMatrix features(const SparseMatrix& counts) const {
        SparseMatrix x = transform_tfidf(tfidf, counts);
        if (keep) x = col_select(x, *keep);
        switch (reducer) {
            case ReducerKind::none: return to_dense(x);
            case ReducerKind::pca: return pca_transform(*pca, to_dense(x));
            default: return encode_batch(*ae, to_dense(x));
        }
    }

    std::vector<int> predict_labels(const SparseMatrix& counts) const {
        return predict(clf, features(counts));
    }

    DenseMatrix predict_probabilities(const SparseMatrix& counts) const {
        return predict_proba(clf, features(counts));
    }
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DivergenceError&) {
        throw;  // already carries epoch/batch context
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(name) + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(std::string(name) + ": " + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(std::string(name) + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(std::string(name) + ": " + e.what());
    }
}

}  // namespace detail

// Fit the full pipeline on training counts. `seed` drives every stochastic
// stage through labeled child seeds.
inline FittedPipeline fit_pipeline(const SparseMatrix& counts, const std::vector<int>& y,
                                   const RunConfig& cfg, std::uint64_t seed,
                                   bool collect_snapshots = false) {
    FittedPipeline p;
    p.reducer = cfg.reducer.kind;

    SparseMatrix x = detail::stage("vectorize", [&] {
        p.tfidf = fit_tfidf(counts, cfg.vectorizer.smooth_idf, cfg.vectorizer.norm);
        return transform_tfidf(p.tfidf, counts);
    });

    if (cfg.select_k > 0 && cfg.select_k < x.n_cols) {
        x = detail::stage("select", [&] {
            const auto scores = chi2_scores(x, y);
            auto [selected, keep] = select_k_best(x, scores, cfg.select_k);
            p.keep = std::move(keep);
            p.tfidf.selected = p.keep;
            return std::move(selected);
        });
    }

    DenseMatrix feats = detail::stage("reduce", [&] {
        const DenseMatrix dense = to_dense(x);
        switch (cfg.reducer.kind) {
            case ReducerKind::none: return dense;
            case ReducerKind::pca: {
                p.pca = fit_pca(dense, cfg.reducer.train.latent_dim);
                return pca_transform(*p.pca, dense);
            }
            case ReducerKind::ae:
            case ReducerKind::lae: {
                TrainConfig t = cfg.reducer.train;
                t.seed = derive_seed(seed, "reducer");
                TrainResult r =
                    train(dense, DenseMatrix(0, dense.n_cols), t, collect_snapshots);
                p.ae = std::move(r.model);
                p.trace = std::move(r.trace);
                return encode_batch(*p.ae, dense);
            }
            case ReducerKind::sae: {
                std::vector<TrainConfig> stages;
                for (std::size_t i = 0; i < cfg.reducer.sae_stages.size(); ++i) {
                    TrainConfig t = cfg.reducer.train;
                    t.latent_dim = cfg.reducer.sae_stages[i];
                    t.seed = derive_seed(seed, "reducer.stage" + std::to_string(i));
                    stages.push_back(t);
                }
                p.ae = train_stacked(dense, DenseMatrix(0, dense.n_cols), stages,
                                     cfg.reducer.fine_tune_epochs);
                return encode_batch(*p.ae, dense);
            }
        }
        throw ConfigError("unknown reducer kind");
    });

    detail::stage("classify", [&] {
        ClassifierConfig c = cfg.classifier;
        c.seed = derive_seed(seed, "classifier");
        p.clf = fit_classifier(feats, y, c);
        return 0;
    });
    return p;
}

// The leakage boundary for fold-based evaluation: the closure refits the
// whole pipeline on each training fold.
inline PipelineFn make_pipeline_fn(const RunConfig& cfg) {
    return [cfg](const SparseMatrix& x_train, const std::vector<int>& y_train,
                 std::uint64_t seed) -> Predictor {
        auto fitted = std::make_shared<FittedPipeline>(fit_pipeline(x_train, y_train, cfg, seed));
        return [fitted](const SparseMatrix& x) { return fitted->predict_labels(x); };
    };
}

// ---- result serialization ----

namespace detail {

inline json metrics_to_json(const Metrics& m) {
    json j;
    j["acc"] = m.accuracy;
    j["pre"] = m.precision ? json(*m.precision) : json();
    j["rec"] = m.recall ? json(*m.recall) : json();
    j["f1"] = m.f1 ? json(*m.f1) : json();
    return j;
}

inline json confusion_to_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

inline json aggregate_to_json(const Aggregate& a) {
    json j;
    j["defined"] = a.defined;
    if (a.defined > 0) {
        j["mean"] = a.mean;
        j["stddev"] = a.stddev;
        j["min"] = a.min;
        j["q1"] = a.q1;
        j["median"] = a.median;
        j["q3"] = a.q3;
        j["max"] = a.max;
    }
    return j;
}

inline json report_to_json(const EvalReport& r) {
    json folds = json::array();
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        json jf = metrics_to_json(r.folds[f].m);
        jf["fold"] = f;
        jf["confusion"] = confusion_to_json(r.folds[f].cm);
        folds.push_back(jf);
    }
    return {{"folds", folds},
            {"aggregate",
             {{"accuracy", aggregate_to_json(r.accuracy)},
              {"precision", aggregate_to_json(r.precision)},
              {"recall", aggregate_to_json(r.recall)},
              {"f1", aggregate_to_json(r.f1)}}}};
}

inline void save_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace detail

// ---- commands ----

// Generates the corpus CSV plus a manifest recording the parameters and the
// label counts.
inline json cmd_synth(const SynthParams& params, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::vector<Document> docs = synth_corpus(params);
    std::ostringstream csv;
    write_corpus_csv(csv, docs);
    const std::string bytes = csv.str();
    write_text_file((fs::path(out_dir) / "corpus.csv").string(), bytes);

    std::size_t positives = 0;
    for (const auto& d : docs) positives += d.label == 1;
    json manifest;
    manifest["seed"] = params.seed;
    manifest["n_docs"] = params.n_docs;
    manifest["vocab_size"] = params.vocab_size;
    manifest["class_balance"] = params.class_balance;
    manifest["nonlinearity"] = params.nonlinearity;
    manifest["label_counts"] = {{"0", docs.size() - positives}, {"1", positives}};
    manifest["fingerprint"] = fingerprint_hex(bytes);
    detail::save_json_file((fs::path(out_dir) / "synth_manifest.json").string(), manifest);
    return manifest;
}

// Executes ingest -> vectorize -> select -> reduce -> classify -> eval
// (+ infoplane when enabled) and writes every artifact under out_dir.
// Returns the run summary, which doubles as a replayable config.
inline json run_pipeline(const RunConfig& cfg, const std::string& out_dir, bool quiet = true) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto out = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    // Presence of this marker means the run aborted partway.
    write_text_file(out(".incomplete"), "run in progress\n");

    const auto note = [&](const std::string& msg) {
        if (!quiet) std::fprintf(stderr, "[textae] %s\n", msg.c_str());
    };

    std::vector<std::string> artifacts;
    json summary;
    summary["schema_version"] = 1;

    // ingest
    std::vector<Document> docs;
    std::string corpus_bytes;
    detail::stage("ingest", [&] {
        if (cfg.data.kind == DataKind::csv) {
            corpus_bytes = read_text_file(cfg.data.path);
            std::istringstream is(corpus_bytes);
            docs = read_corpus_csv(is);
        } else {
            docs = synth_corpus(cfg.data.synth);
            std::ostringstream csv;
            write_corpus_csv(csv, docs);
            corpus_bytes = csv.str();
            write_text_file(out("corpus.csv"), corpus_bytes);
            artifacts.push_back("corpus.csv");
        }
        return 0;
    });
    const std::string fingerprint = fingerprint_hex(corpus_bytes);
    note("ingested " + std::to_string(docs.size()) + " documents");

    // tokenize + count once over the corpus; everything statistical is
    // refitted inside folds
    const CountResult counted = detail::stage("vectorize", [&] {
        return build_counts(docs, cfg.vectorizer.ngram_min, cfg.vectorizer.ngram_max);
    });
    {
        std::ostringstream vs;
        save_vocabulary(vs, counted.vocab);
        write_text_file(out("vocabulary.txt"), vs.str());
        artifacts.push_back("vocabulary.txt");
    }
    note("vocabulary of " + std::to_string(counted.vocab.terms.size()) + " terms");

    // an oversized K degenerates to no selection
    RunConfig eff = cfg;
    if (eff.select_k >= counted.counts.n_cols) eff.select_k = 0;

    json results;
    if (eff.eval.mode == EvalMode::split) {
        const SplitIndices parts =
            detail::stage("eval", [&] { return split(counted.labels, eff.eval.ratios, eff.seed); });
        const SparseMatrix x_train = row_slice(counted.counts, parts.train);
        const std::vector<int> y_train = detail::gather_labels(counted.labels, parts.train);
        const FittedPipeline fitted =
            fit_pipeline(x_train, y_train, eff, derive_seed(eff.seed, "fit"));

        const auto eval_part = [&](const std::vector<std::size_t>& idx) {
            FoldResult fr;
            const auto pred = fitted.predict_labels(row_slice(counted.counts, idx));
            fr.cm = confusion(detail::gather_labels(counted.labels, idx), pred);
            fr.m = metrics(fr.cm);
            return fr;
        };
        const FoldResult on_val = detail::stage("eval", [&] { return eval_part(parts.val); });
        const FoldResult on_test = detail::stage("eval", [&] { return eval_part(parts.test); });

        results["val"] = detail::metrics_to_json(on_val.m);
        results["val"]["confusion"] = detail::confusion_to_json(on_val.cm);
        results["test"] = detail::metrics_to_json(on_test.m);
        results["test"]["confusion"] = detail::confusion_to_json(on_test.cm);

        // models
        {
            std::ostringstream ss;
            save_tfidf(ss, fitted.tfidf);
            write_text_file(out("tfidf.txt"), ss.str());
            artifacts.push_back("tfidf.txt");
        }
        if (fitted.pca) {
            std::ostringstream ss;
            save_pca(ss, *fitted.pca);
            write_text_file(out("reducer.txt"), ss.str());
            artifacts.push_back("reducer.txt");
        }
        if (fitted.ae) {
            std::ostringstream ss;
            save_model(ss, *fitted.ae);
            write_text_file(out("reducer.txt"), ss.str());
            artifacts.push_back("reducer.txt");
        }
        if (fitted.trace) {
            std::ostringstream ss;
            save_trace_csv(ss, *fitted.trace);
            write_text_file(out("trace.csv"), ss.str());
            artifacts.push_back("trace.csv");
        }
        {
            std::ostringstream ss;
            save_classifier(ss, fitted.clf);
            write_text_file(out("classifier.txt"), ss.str());
            artifacts.push_back("classifier.txt");
        }
        // report.csv: one row per evaluated part
        {
            std::ostringstream ss;
            ss << "fold,acc,pre,rec,f1\n";
            const auto row = [&](const char* name, const Metrics& m) {
                ss << name << ',' << fmt_double(m.accuracy) << ',' << metric_cell(m.precision)
                   << ',' << metric_cell(m.recall) << ',' << metric_cell(m.f1) << '\n';
            };
            row("val", on_val.m);
            row("test", on_test.m);
            write_text_file(out("report.csv"), ss.str());
            artifacts.push_back("report.csv");
        }
        // predictions on the test part
        {
            const SparseMatrix x_test = row_slice(counted.counts, parts.test);
            const DenseMatrix proba = fitted.predict_probabilities(x_test);
            std::ostringstream ss;
            ss << "id,predicted,proba_0,proba_1\n";
            for (std::size_t i = 0; i < parts.test.size(); ++i) {
                const int label = proba(i, 1) > proba(i, 0) ? 1 : 0;
                ss << docs[parts.test[i]].id << ',' << label << ',' << fmt_double(proba(i, 0))
                   << ',' << fmt_double(proba(i, 1)) << '\n';
            }
            write_text_file(out("predictions.csv"), ss.str());
            artifacts.push_back("predictions.csv");
        }
    } else if (eff.eval.mode == EvalMode::cv) {
        const EvalReport report = detail::stage("eval", [&] {
            return cross_validate(make_pipeline_fn(eff), counted.counts, counted.labels,
                                  eff.eval.k, eff.seed);
        });
        results = detail::report_to_json(report);
        std::ostringstream ss;
        save_report_csv(ss, report);
        write_text_file(out("report.csv"), ss.str());
        artifacts.push_back("report.csv");
    } else {
        const auto curve = detail::stage("eval", [&] {
            return learning_curve(make_pipeline_fn(eff), counted.counts, counted.labels,
                                  eff.eval.train_sizes, eff.seed);
        });
        json jc = json::array();
        for (const auto& p : curve) {
            json jp;
            jp["size"] = p.train_size;
            jp["train"] = detail::metrics_to_json(p.train_score);
            jp["val"] = detail::metrics_to_json(p.val_score);
            jc.push_back(jp);
        }
        results["curve"] = jc;
        std::ostringstream ss;
        save_learning_curve_csv(ss, curve);
        write_text_file(out("learning_curve.csv"), ss.str());
        artifacts.push_back("learning_curve.csv");
    }
    note("evaluation complete");

    if (eff.infoplane.enabled) {
        detail::stage("infoplane", [&] {
            // Observer stage: trains the configured autoencoder on the
            // stratified training portion with snapshots and traces it.
            // Classification outputs above are untouched.
            const SplitIndices parts = split(counted.labels, {0.6, 0.2, 0.2}, eff.seed);
            const SparseMatrix x_train = row_slice(counted.counts, parts.train);
            const std::vector<int> y_train = detail::gather_labels(counted.labels, parts.train);
            const FittedPipeline fitted =
                fit_pipeline(x_train, y_train, eff, derive_seed(eff.seed, "fit"), true);

            TfidfModel tf = fitted.tfidf;
            SparseMatrix x = transform_tfidf(tf, x_train);
            if (fitted.keep) x = col_select(x, *fitted.keep);
            const auto points =
                trace_information_plane(fitted.trace->snapshots, to_dense(x), eff.infoplane.n_bins);
            std::ostringstream ss;
            save_infoplane_csv(ss, points);
            write_text_file(out("infoplane.csv"), ss.str());
            artifacts.push_back("infoplane.csv");
            return 0;
        });
        note("information-plane trace written");
    }

    summary["config"] = run_config_to_json(eff);
    summary["fingerprint"] = fingerprint;
    summary["results"] = results;
    artifacts.push_back("run_summary.json");
    summary["artifacts"] = artifacts;
    detail::save_json_file(out("run_summary.json"), summary);
    std::filesystem::remove(out(".incomplete"));
    return summary;
}

// Aligned metric table across runs of the same corpus. The first summary is
// the baseline for the delta columns.
inline std::string cmd_compare(const std::vector<json>& summaries) {
    if (summaries.size() < 2) throw ConfigError("compare: need at least 2 run summaries");
    for (const auto& s : summaries)
        if (!s.contains("fingerprint") || !s.contains("config"))
            throw DataError("compare: input is not a run summary");
    const std::string fp = summaries[0].at("fingerprint").get<std::string>();
    for (const auto& s : summaries)
        if (s.at("fingerprint").get<std::string>() != fp)
            throw DataError("compare: data fingerprints differ");

    struct Row {
        std::string reducer, classifier;
        std::array<std::optional<double>, 4> mean, dispersion;
    };
    const auto extract = [](const json& s) {
        Row r;
        r.reducer = s.at("config").at("reducer").at("kind").get<std::string>();
        r.classifier = s.at("config").at("classifier").at("kind").get<std::string>();
        const json& res = s.at("results");
        const char* names[4] = {"accuracy", "precision", "recall", "f1"};
        const char* short_names[4] = {"acc", "pre", "rec", "f1"};
        if (res.contains("aggregate")) {
            for (int i = 0; i < 4; ++i) {
                const json& a = res.at("aggregate").at(names[i]);
                if (a.contains("mean")) {
                    r.mean[i] = a.at("mean").get<double>();
                    r.dispersion[i] = a.at("stddev").get<double>();
                }
            }
        } else if (res.contains("test")) {
            for (int i = 0; i < 4; ++i) {
                const json& v = res.at("test").at(short_names[i]);
                if (!v.is_null()) r.mean[i] = v.get<double>();
            }
        } else {
            throw DataError("compare: summary has no comparable metrics");
        }
        return r;
    };

    std::vector<Row> rows;
    for (const auto& s : summaries) rows.push_back(extract(s));

    std::ostringstream ss;
    ss << "run,reducer,classifier,acc_mean,acc_std,pre_mean,pre_std,rec_mean,rec_std,"
          "f1_mean,f1_std,delta_acc,delta_pre,delta_rec,delta_f1\n";
    const auto cell = [](const std::optional<double>& v) {
        return v ? fmt_double(*v) : std::string();
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ss << i << ',' << rows[i].reducer << ',' << rows[i].classifier;
        for (int k = 0; k < 4; ++k)
            ss << ',' << cell(rows[i].mean[k]) << ',' << cell(rows[i].dispersion[k]);
        for (int k = 0; k < 4; ++k) {
            std::optional<double> delta;
            if (rows[i].mean[k] && rows[0].mean[k]) delta = *rows[i].mean[k] - *rows[0].mean[k];
            ss << ',' << cell(delta);
        }
        ss << '\n';
    }
    return ss.str();
}

}  // namespace textae
