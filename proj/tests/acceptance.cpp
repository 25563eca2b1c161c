// Acceptance suite: nine end-to-end checks covering gradient correctness,
// reconstruction baselines, downstream classification gains, learning-curve
// behaviour, information-plane trends, metric exactness, and bitwise
// reproducibility. One printed line per criterion; nonzero exit on any
// failure. Tolerances and runtime budgets are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "textae/pipeline.hpp"

using namespace textae;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---- criterion 1: finite-difference gradient checks ----

// Central differences with h = 1e-5; relative error floored at 1e-4 gradient
// magnitude so near-zero entries compare absolutely at 1e-9.
double max_rel_error_ae(AutoencoderModel& m, const DenseMatrix& batch, double wd) {
    const double h = 1e-5;
    const Gradients g = compute_gradients(m, batch, wd);
    double worst = 0.0;
    const auto check = [&](double* slot, double analytic) {
        const double v = *slot;
        *slot = v + h;
        const double up = batch_objective(m, batch, wd);
        *slot = v - h;
        const double dn = batch_objective(m, batch, wd);
        *slot = v;
        const double fd = (up - dn) / (2.0 * h);
        const double rel = std::abs(fd - analytic) / std::max({std::abs(analytic), std::abs(fd), 1e-4});
        worst = std::max(worst, rel);
    };
    for (std::size_t i = 0; i < m.enc_weights.size(); ++i) {
        for (std::size_t k = 0; k < m.enc_weights[i].data.size(); ++k)
            check(&m.enc_weights[i].data[k], g.enc_w[i].data[k]);
        for (std::size_t k = 0; k < m.enc_biases[i].size(); ++k)
            check(&m.enc_biases[i][k], g.enc_b[i][k]);
    }
    for (std::size_t j = 0; j < m.dec_weights.size(); ++j)
        for (std::size_t k = 0; k < m.dec_weights[j].data.size(); ++k)
            check(&m.dec_weights[j].data[k], g.dec_w[j].data[k]);
    for (std::size_t j = 0; j < m.dec_biases.size(); ++j)
        for (std::size_t k = 0; k < m.dec_biases[j].size(); ++k)
            check(&m.dec_biases[j][k], g.dec_b[j][k]);
    return worst;
}

DenseMatrix random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    DenseMatrix x(n, d);
    for (auto& v : x.data) v = rng.uniform();
    return x;
}

Outcome criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;

    struct Case {
        std::size_t d, neurons, latent, layers, batch;
        bool tied;
        Activation act;
        double wd;
    };
    const Case cases[] = {
        {10, 6, 4, 1, 7, true, Activation::sigmoid, 1e-3},
        {8, 5, 3, 1, 5, false, Activation::sigmoid, 1e-4},
        {12, 6, 2, 2, 6, true, Activation::sigmoid, 0.0},
        {9, 4, 3, 1, 6, true, Activation::linear, 1e-3},
    };
    std::uint64_t seed = 100;
    for (const Case& c : cases) {
        TrainConfig cfg;
        cfg.hidden_layers = c.layers;
        cfg.neurons = c.neurons;
        cfg.latent_dim = c.latent;
        cfg.activation = c.act;
        cfg.decoder_activation = c.act;
        cfg.tied = c.tied;
        cfg.seed = seed;
        AutoencoderModel m = init_model(c.d, cfg);
        const DenseMatrix batch = random_batch(c.batch, c.d, seed + 1);
        worst = std::max(worst, max_rel_error_ae(m, batch, c.wd));
        seed += 10;
    }

    // logistic regression: weights and bias against the same scheme
    {
        Rng rng(777);
        const std::size_t n = 12, d = 6;
        DenseMatrix x(n, d);
        for (auto& v : x.data) v = rng.normal();
        std::vector<int> y(n);
        for (auto& v : y) v = rng.below(2) == 1;
        std::vector<double> w(d);
        for (auto& v : w) v = 0.5 * rng.normal();
        double b = 0.3;
        const double c = 2.0, h = 1e-5;
        std::vector<double> gw;
        double gb = 0.0;
        logreg_gradient(w, b, x, y, c, gw, gb);
        const auto check = [&](double* slot, double analytic) {
            const double v = *slot;
            *slot = v + h;
            const double up = logreg_objective(w, b, x, y, c);
            *slot = v - h;
            const double dn = logreg_objective(w, b, x, y, c);
            *slot = v;
            const double fd = (up - dn) / (2.0 * h);
            const double rel =
                std::abs(fd - analytic) / std::max({std::abs(analytic), std::abs(fd), 1e-4});
            worst = std::max(worst, rel);
        };
        for (std::size_t k = 0; k < d; ++k) check(&w[k], gw[k]);
        check(&b, gb);
    }

    const double secs = seconds_since(t0);
    return {worst <= 1e-5 && secs < 10.0,
            fmt("max relative error %.2e (limit 1e-05) in %.1fs (budget 10s)", worst, secs)};
}

// ---- criterion 2: linear AE vs PCA on Gaussian data ----

DenseMatrix gaussian_low_rank(std::size_t n, std::size_t d, std::uint64_t seed) {
    const std::vector<double> scales{3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.8, 0.6};
    Rng rng(seed);
    DenseMatrix f(n, scales.size());
    for (auto& v : f.data) v = rng.normal();
    DenseMatrix w(scales.size(), d);
    for (auto& v : w.data) v = rng.normal() / std::sqrt(static_cast<double>(d));
    DenseMatrix x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < scales.size(); ++k) {
            const double fv = f(i, k) * scales[k];
            for (std::size_t j = 0; j < d; ++j) x(i, j) += fv * w(k, j);
        }
    for (auto& v : x.data) v += 0.05 * rng.normal();
    return x;
}

Outcome criterion_pca_lae() {
    const auto t0 = std::chrono::steady_clock::now();
    const DenseMatrix x = gaussian_low_rank(500, 50, 2401);
    double worst_gap = 0.0;
    std::string parts;
    for (std::size_t m : {2, 5, 10}) {
        const PcaModel pca = fit_pca(x, m);
        const double r2_pca = r_squared(x, pca_reconstruct(pca, x)).mean;

        TrainConfig cfg;
        cfg.hidden_layers = 1;
        cfg.neurons = 32;
        cfg.latent_dim = m;
        cfg.activation = Activation::linear;
        cfg.decoder_activation = Activation::linear;
        cfg.tied = true;
        cfg.optimizer = Optimizer::adam;
        cfg.learning_rate = 0.01;
        cfg.weight_decay = 0.0;
        cfg.epochs = 600;
        cfg.batch_size = 64;
        cfg.seed = 55 + m;
        const TrainResult r = train(x, cfg);
        const double r2_lae = r_squared(x, decode_batch(r.model, encode_batch(r.model, x))).mean;

        const double gap = std::abs(r2_lae - r2_pca);
        worst_gap = std::max(worst_gap, gap);
        parts += fmt("%sM=%zu pca %.4f lae %.4f", parts.empty() ? "" : ", ", m, r2_pca, r2_lae);
    }
    const double secs = seconds_since(t0);
    return {worst_gap <= 0.02 && secs < 60.0,
            parts + fmt("; max gap %.4f (limit 0.02) in %.1fs (budget 60s)", worst_gap, secs)};
}

// ---- shared nonlinear corpus for criteria 3-6 ----

struct SharedCorpus {
    std::vector<Document> docs;
    std::vector<int> labels;
    SparseMatrix counts;  // unigram document-term counts
};

// 2000 documents whose class lives only in marker co-occurrence; the ~1100
// unigram vocabulary leaves real work for the chi2 top-1000 selection.
const SharedCorpus& shared_corpus() {
    static const SharedCorpus s = [] {
        SynthParams p;
        p.seed = 31415;
        p.n_docs = 2000;
        p.vocab_size = 1100;
        p.class_balance = 0.5;
        p.nonlinearity = true;
        SharedCorpus sc;
        sc.docs = synth_corpus(p);
        CountResult uni = build_counts(sc.docs, 1, 1);
        sc.labels = uni.labels;
        sc.counts = std::move(uni.counts);
        return sc;
    }();
    return s;
}

// tf-idf + chi2 top-k columns, densified
DenseMatrix selected_features(const SparseMatrix& counts, const std::vector<int>& y,
                              std::size_t k) {
    const TfidfModel tf = fit_tfidf(counts, true, Norm::l2);
    const SparseMatrix x = transform_tfidf(tf, counts);
    const auto scores = chi2_scores(x, y);
    auto [sel, keep] = select_k_best(x, scores, k);
    return to_dense(sel);
}

TrainConfig nonlinear_ae_config(std::size_t epochs) {
    TrainConfig cfg;
    cfg.hidden_layers = 1;
    cfg.neurons = 128;
    cfg.latent_dim = 16;
    cfg.activation = Activation::sigmoid;
    cfg.decoder_activation = Activation::sigmoid;
    cfg.tied = true;
    cfg.optimizer = Optimizer::adam;
    cfg.learning_rate = 0.01;
    cfg.weight_decay = 1e-6;
    cfg.epochs = epochs;
    cfg.batch_size = 32;
    cfg.seed = 60601;
    return cfg;
}

Outcome criterion_nonlinear_advantage() {
    const auto t0 = std::chrono::steady_clock::now();
    const SharedCorpus& sc = shared_corpus();
    const DenseMatrix dense = selected_features(sc.counts, sc.labels, 1000);

    const PcaModel pca = fit_pca(dense, 16);
    const double r2_pca = r_squared(dense, pca_reconstruct(pca, dense)).mean;

    const TrainResult r = train(dense, nonlinear_ae_config(300));
    const double r2_ae = r_squared(dense, decode_batch(r.model, encode_batch(r.model, dense))).mean;

    const double secs = seconds_since(t0);
    return {r2_ae >= r2_pca + 0.03 && secs < 300.0,
            fmt("ae R2 %.4f vs pca R2 %.4f (need +0.03) on %zux%zu in %.1fs (budget 300s)", r2_ae,
                r2_pca, dense.n_rows, dense.n_cols, secs)};
}

// ---- criterion 4: downstream gain under cross-validation ----

RunConfig mlp_pipeline_config(bool use_ae) {
    RunConfig cfg;
    cfg.seed = 271828;
    cfg.vectorizer.ngram_min = 1;
    cfg.vectorizer.ngram_max = 1;
    if (use_ae) {
        cfg.select_k = 1000;
        cfg.reducer.kind = ReducerKind::ae;
        cfg.reducer.train = nonlinear_ae_config(150);
    } else {
        cfg.select_k = 16;  // matches the autoencoder bottleneck width
        cfg.reducer.kind = ReducerKind::none;
    }
    cfg.classifier.kind = ClassifierKind::mlp;
    cfg.classifier.hidden_units = 32;
    cfg.classifier.epochs = 50;
    cfg.classifier.batch_size = 32;
    cfg.classifier.mlp_lr = 0.001;
    return cfg;
}

Outcome criterion_downstream_gain() {
    const auto t0 = std::chrono::steady_clock::now();
    const SharedCorpus& sc = shared_corpus();
    // Every fold refits tf-idf, selection, the reducer, and the classifier on
    // its own training rows, so no held-out statistics leak into the fit.
    const EvalReport with_ae = cross_validate(make_pipeline_fn(mlp_pipeline_config(true)),
                                              sc.counts, sc.labels, 5, 11);
    const EvalReport with_kbest = cross_validate(make_pipeline_fn(mlp_pipeline_config(false)),
                                                 sc.counts, sc.labels, 5, 11);
    const double acc_ae = with_ae.accuracy.mean;
    const double acc_kbest = with_kbest.accuracy.mean;
    const double secs = seconds_since(t0);
    return {acc_ae >= acc_kbest + 0.01 && secs < 600.0,
            fmt("5-fold mlp accuracy: ae codes %.4f vs top-16 chi2 %.4f (need +0.01) in %.1fs "
                "(budget 600s)",
                acc_ae, acc_kbest, secs)};
}

// ---- criteria 5 and 6: classifier ordering and learning curves ----

RunConfig unigram_config(ClassifierKind kind) {
    RunConfig cfg;
    cfg.seed = 161803;
    cfg.vectorizer.ngram_max = 1;
    cfg.select_k = 0;
    cfg.reducer.kind = ReducerKind::none;
    cfg.classifier.kind = kind;
    cfg.classifier.hidden_units = 48;
    cfg.classifier.epochs = 50;
    cfg.classifier.batch_size = 32;
    cfg.classifier.logreg_iters = 300;
    cfg.classifier.logreg_lr = 0.5;
    return cfg;
}

Outcome criterion_classifier_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const SharedCorpus& sc = shared_corpus();
    const auto run = [&](ClassifierKind kind) {
        return cross_validate(make_pipeline_fn(unigram_config(kind)), sc.counts, sc.labels, 5, 13)
            .accuracy.mean;
    };
    const double acc_mlp = run(ClassifierKind::mlp);
    const double acc_lr = run(ClassifierKind::logreg);
    const double acc_gnb = run(ClassifierKind::gaussian_nb);
    const double secs = seconds_since(t0);
    return {acc_mlp >= acc_lr + 0.005 && acc_mlp >= acc_gnb + 0.005,
            fmt("5-fold accuracy mlp %.4f, logreg %.4f, gaussian_nb %.4f (mlp needs +0.005 over "
                "both) in %.1fs",
                acc_mlp, acc_lr, acc_gnb, secs)};
}

Outcome criterion_learning_plateau() {
    const auto t0 = std::chrono::steady_clock::now();
    const SharedCorpus& sc = shared_corpus();
    const std::vector<std::size_t> sizes{93, 187, 375, 750};
    const auto gain = [&](ClassifierKind kind) {
        const auto curve = learning_curve(make_pipeline_fn(unigram_config(kind)), sc.counts,
                                          sc.labels, sizes, 17);
        const std::size_t last = curve.size() - 1;
        return curve[last].val_score.accuracy - curve[last - 1].val_score.accuracy;
    };
    const double gnb_gain = gain(ClassifierKind::gaussian_nb);
    const double mlp_gain = gain(ClassifierKind::mlp);
    const double secs = seconds_since(t0);
    return {gnb_gain <= 0.01 && mlp_gain > gnb_gain,
            fmt("validation gain over the 375->750 doubling: gaussian_nb %+.4f (plateau limit "
                "0.01), mlp %+.4f (must exceed it) in %.1fs",
                gnb_gain, mlp_gain, secs)};
}

// ---- criterion 7: information-plane trends and estimator exactness ----

Outcome criterion_infoplane() {
    const auto t0 = std::chrono::steady_clock::now();

    // estimator exactness over 1000 randomized cases
    Rng rng(90210);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 30 + rng.below(91);
        const std::uint64_t ka = 2 + rng.below(5), kb = 2 + rng.below(5);
        std::vector<std::uint64_t> a(n), b(n);
        for (auto& v : a) v = rng.below(ka);
        for (auto& v : b) v = rng.below(kb);
        worst = std::max(worst, std::abs(mutual_information(a, a) - entropy_bits(a)));
        worst = std::max(worst,
                         std::abs(mutual_information(a, b) - mutual_information(b, a)));
        const double bound = std::min(entropy_bits(a), entropy_bits(b));
        worst = std::max(worst, std::max(0.0, mutual_information(a, b) - bound));

        // exact product distribution: the complete (ka x kb) grid repeated
        const std::size_t reps = 1 + rng.below(3);
        std::vector<std::uint64_t> pa, pb;
        for (std::size_t r = 0; r < reps; ++r)
            for (std::uint64_t i = 0; i < ka; ++i)
                for (std::uint64_t j = 0; j < kb; ++j) {
                    pa.push_back(i);
                    pb.push_back(j);
                }
        for (std::size_t i = pa.size(); i > 1; --i) {
            const std::size_t j = rng.below(i);
            std::swap(pa[i - 1], pa[j]);
            std::swap(pb[i - 1], pb[j]);
        }
        worst = std::max(worst, std::abs(mutual_information(pa, pb)));
    }

    // bottleneck I(T;X') drift on a small trained autoencoder
    SynthParams p;
    p.seed = 424;
    p.n_docs = 300;
    p.vocab_size = 24;
    p.class_balance = 0.5;
    const auto docs = synth_corpus(p);
    const CountResult counted = build_counts(docs, 1, 1);
    const TfidfModel tf = fit_tfidf(counted.counts, true, Norm::l2);
    const DenseMatrix dense = to_dense(transform_tfidf(tf, counted.counts));

    TrainConfig cfg;
    cfg.hidden_layers = 1;
    cfg.neurons = 12;
    cfg.latent_dim = 2;
    cfg.learning_rate = 0.01;
    cfg.epochs = 80;
    cfg.batch_size = 32;
    cfg.seed = 515;
    const TrainResult r = train(dense, DenseMatrix(0, dense.n_cols), cfg, true);
    const auto points = trace_information_plane(r.trace.snapshots, dense, 30);
    const std::size_t bottleneck = r.trace.snapshots.front().second.depth();  // encoder output
    double first = 0.0, last = 0.0;
    bool seen = false;
    for (const auto& pt : points) {
        if (pt.layer_index != bottleneck) continue;
        if (!seen) first = pt.i_tx;
        last = pt.i_tx;
        seen = true;
    }
    const double drift = last - first;

    const double secs = seconds_since(t0);
    return {seen && drift >= 0.2 && worst <= 1e-12,
            fmt("bottleneck I(T;X') %.3f -> %.3f bits (drift %+.3f, need >= 0.2); estimator max "
                "deviation %.1e (limit 1e-12) in %.1fs",
                first, last, drift, worst, secs)};
}

// ---- criterion 8: sparsity and metric exactness ----

Outcome criterion_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;

    const SparseMatrix empty = SparseMatrix::from_triplets(4, 4, {});
    ok &= sparsity(empty) == 1.0;

    std::vector<std::tuple<std::size_t, std::size_t, double>> full;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) full.push_back({i, j, 1.0});
    ok &= sparsity(SparseMatrix::from_triplets(3, 3, full)) == 0.0;

    const SparseMatrix one = SparseMatrix::from_triplets(4, 4, {{2, 1, 5.0}});
    ok &= sparsity(one) == 0.9375;

    ConfusionMatrix cm;
    cm.tp = 3;
    cm.tn = 4;
    cm.fp = 1;
    cm.fn = 2;
    const Metrics m = metrics(cm);
    ok &= std::abs(m.accuracy - 0.7) <= 1e-4;
    ok &= m.precision && std::abs(*m.precision - 0.75) <= 1e-4;
    ok &= m.recall && std::abs(*m.recall - 0.6) <= 1e-4;
    ok &= m.f1 && std::abs(*m.f1 - 0.6667) <= 1e-4;

    const double secs = seconds_since(t0);
    return {ok, fmt("sparsity {1.0, 0.0, 0.9375} exact; metrics acc %.4f pre %.4f rec %.4f f1 "
                    "%.4f (each within 1e-4) in %.1fs",
                    m.accuracy, *m.precision, *m.recall, *m.f1, secs)};
}

// ---- criterion 9: bitwise replay ----

Outcome criterion_replay() {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();

    RunConfig cfg;
    cfg.seed = 77;
    cfg.data.kind = DataKind::synth;
    cfg.data.synth.seed = 404;
    cfg.data.synth.n_docs = 220;
    cfg.data.synth.vocab_size = 30;
    cfg.data.synth.class_balance = 0.45;
    cfg.data.synth.nonlinearity = true;
    cfg.select_k = 64;
    cfg.reducer.kind = ReducerKind::ae;
    cfg.reducer.train.neurons = 16;
    cfg.reducer.train.latent_dim = 4;
    cfg.reducer.train.learning_rate = 0.01;
    cfg.reducer.train.epochs = 10;
    cfg.reducer.train.batch_size = 16;
    cfg.eval.mode = EvalMode::split;
    cfg.classifier.kind = ClassifierKind::logreg;
    cfg.infoplane.enabled = true;
    cfg.infoplane.n_bins = 10;

    const fs::path base =
        fs::temp_directory_path() / ("textae_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    const fs::path d1 = base / "first", d2 = base / "replay";
    const json summary = run_pipeline(cfg, d1.string());
    const RunConfig replayed = run_config_from_json(summary);
    run_pipeline(replayed, d2.string());

    std::size_t compared = 0, equal = 0;
    for (const auto& a : summary.at("artifacts")) {
        const std::string name = a.get<std::string>();
        ++compared;
        equal += read_text_file((d1 / name).string()) == read_text_file((d2 / name).string());
    }
    fs::remove_all(base);

    const double secs = seconds_since(t0);
    return {compared > 0 && equal == compared,
            fmt("%zu/%zu artifacts byte-identical after replaying the run summary in %.1fs", equal,
                compared, secs)};
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Outcome()> run;
    };
    const Entry entries[] = {
        {"gradients match central finite differences", criterion_gradients},
        {"linear autoencoder matches PCA reconstruction", criterion_pca_lae},
        {"sigmoid autoencoder beats PCA on nonlinear text features", criterion_nonlinear_advantage},
        {"MLP on autoencoder codes beats MLP on top-k selection", criterion_downstream_gain},
        {"MLP outperforms logistic regression and gaussian NB", criterion_classifier_ordering},
        {"gaussian NB plateaus while MLP keeps improving", criterion_learning_plateau},
        {"information-plane drift and estimator exactness", criterion_infoplane},
        {"sparsity and confusion-matrix metrics are exact", criterion_exactness},
        {"pipeline replay from the run summary is bitwise", criterion_replay},
    };

    int failures = 0;
    int idx = 0;
    for (const Entry& e : entries) {
        ++idx;
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        failures += !o.pass;
        std::printf("[%d/9] %s  %s: %s\n", idx, o.pass ? "PASS" : "FAIL", e.name,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
