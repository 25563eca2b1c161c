#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/rng.hpp"
#include "textae/textio.hpp"

namespace textae {

struct ConfusionMatrix {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::size_t total() const { return tp + tn + fp + fn; }
};

inline ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw ShapeError("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] != 0 && y_true[i] != 1) throw DomainError("labels must be 0 or 1");
        if (y_pred[i] != 0 && y_pred[i] != 1) throw DomainError("predictions must be 0 or 1");
        if (y_true[i] == 1)
            y_pred[i] == 1 ? ++cm.tp : ++cm.fn;
        else
            y_pred[i] == 0 ? ++cm.tn : ++cm.fp;
    }
    return cm;
}

// Zero-denominator metrics are reported as absent, never silently 0.
struct Metrics {
    double accuracy = 0.0;
    std::optional<double> precision, recall, f1;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DomainError("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0)
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    if (cm.tp + cm.fn > 0)
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

// ---- splitting ----

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

namespace detail {

inline void check_labels01(const std::vector<int>& y) {
    if (y.empty()) throw DomainError("empty label vector");
    for (int v : y)
        if (v != 0 && v != 1) throw DomainError("labels must be 0 or 1");
}

inline std::array<std::vector<std::size_t>, 2> class_indices(const std::vector<int>& y) {
    std::array<std::vector<std::size_t>, 2> idx;
    for (std::size_t i = 0; i < y.size(); ++i) idx[y[i]].push_back(i);
    return idx;
}

}  // namespace detail

// Stratified train/val/test partition: each class is allocated by rounding
// its share per part, so the class mix survives the split.
inline SplitIndices split(const std::vector<int>& y, std::array<double, 3> ratios,
                          std::uint64_t seed) {
    detail::check_labels01(y);
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw ConfigError("split: negative ratio");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");

    Rng rng(derive_seed(seed, "split"));
    SplitIndices out;
    auto by_class = detail::class_indices(y);
    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        rng.shuffle(idx);
        const double n = static_cast<double>(idx.size());
        std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
        n_train = std::min(n_train, idx.size());
        std::size_t n_val = static_cast<std::size_t>(std::llround(ratios[1] * n));
        n_val = std::min(n_val, idx.size() - n_train);
        if ((ratios[0] > 0.0 && n_train == 0) || (ratios[1] > 0.0 && n_val == 0) ||
            (ratios[2] > 0.0 && idx.size() - n_train - n_val == 0))
            throw DomainError("split: a class is too small to stratify");
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + n_train);
        out.val.insert(out.val.end(), idx.begin() + n_train, idx.begin() + n_train + n_val);
        out.test.insert(out.test.end(), idx.begin() + n_train + n_val, idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

// Stratified k folds; a single counter deals shuffled per-class indices
// round-robin so fold sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& y,
                                                              std::size_t k, std::uint64_t seed) {
    detail::check_labels01(y);
    if (k < 2) throw ConfigError("stratified_folds: k must be at least 2");
    auto by_class = detail::class_indices(y);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < k) throw DomainError("stratified_folds: class smaller than k");

    Rng rng(derive_seed(seed, "folds"));
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t counter = 0;
    for (int c = 0; c < 2; ++c) {
        rng.shuffle(by_class[c]);
        for (std::size_t i : by_class[c]) folds[counter++ % k].push_back(i);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

// ---- cross-validation harness ----

// A fitted pipeline becomes a pure prediction closure; all fitting (tf-idf,
// selection, reduction, classifier) must happen inside the PipelineFn so
// held-out folds never leak into it.
using Predictor = std::function<std::vector<int>(const SparseMatrix&)>;
using PipelineFn = std::function<Predictor(const SparseMatrix& x_train,
                                           const std::vector<int>& y_train, std::uint64_t seed)>;

struct FoldResult {
    ConfusionMatrix cm;
    Metrics m;
};

struct Aggregate {
    std::size_t defined = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// linear-interpolation quantile on a sorted sample
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.size() == 1) return v[0];
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace detail

inline Aggregate aggregate(const std::vector<std::optional<double>>& values) {
    Aggregate a;
    std::vector<double> v;
    for (const auto& x : values)
        if (x) v.push_back(*x);
    a.defined = v.size();
    if (v.empty()) return a;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    a.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(v.size()));
    a.min = v.front();
    a.max = v.back();
    a.q1 = detail::quantile_sorted(v, 0.25);
    a.median = detail::quantile_sorted(v, 0.5);
    a.q3 = detail::quantile_sorted(v, 0.75);
    return a;
}

struct EvalReport {
    std::vector<FoldResult> folds;
    Aggregate accuracy, precision, recall, f1;
};

namespace detail {

inline void aggregate_report(EvalReport& r) {
    std::vector<std::optional<double>> acc, pre, rec, f1;
    for (const auto& f : r.folds) {
        acc.push_back(f.m.accuracy);
        pre.push_back(f.m.precision);
        rec.push_back(f.m.recall);
        f1.push_back(f.m.f1);
    }
    r.accuracy = aggregate(acc);
    r.precision = aggregate(pre);
    r.recall = aggregate(rec);
    r.f1 = aggregate(f1);
}

inline std::vector<int> gather_labels(const std::vector<int>& y,
                                      const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(y[i]);
    return out;
}

}  // namespace detail

// Stratified k-fold cross-validation. Each fold refits the pipeline on the
// other k-1 folds under a fold-labeled child seed and scores the held-out
// fold. Reproducible bitwise for a deterministic pipeline.
inline EvalReport cross_validate(const PipelineFn& pipeline, const SparseMatrix& x,
                                 const std::vector<int>& y, std::size_t k, std::uint64_t seed) {
    if (x.n_rows != y.size()) throw ShapeError("cross_validate: labels != rows");
    const auto folds = stratified_folds(y, k, seed);
    EvalReport report;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < k; ++g)
            if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        std::sort(train_idx.begin(), train_idx.end());

        const SparseMatrix x_train = row_slice(x, train_idx);
        const std::vector<int> y_train = detail::gather_labels(y, train_idx);
        const Predictor predictor =
            pipeline(x_train, y_train, derive_seed(seed, "cv.fold" + std::to_string(f)));

        const std::vector<int> pred = predictor(row_slice(x, folds[f]));
        FoldResult fr;
        fr.cm = confusion(detail::gather_labels(y, folds[f]), pred);
        fr.m = metrics(fr.cm);
        report.folds.push_back(fr);
    }
    detail::aggregate_report(report);
    return report;
}

// ---- learning curves ----

struct LearningCurvePoint {
    std::size_t train_size = 0;
    Metrics train_score;
    Metrics val_score;
};

// Sweeps training-set size over a fixed stratified 75/25 pool/validation
// split. Subsets are nested (each size extends the previous one) via a
// proportional class interleave of the shuffled pool.
inline std::vector<LearningCurvePoint> learning_curve(const PipelineFn& pipeline,
                                                      const SparseMatrix& x,
                                                      const std::vector<int>& y,
                                                      const std::vector<std::size_t>& train_sizes,
                                                      std::uint64_t seed) {
    if (x.n_rows != y.size()) throw ShapeError("learning_curve: labels != rows");
    if (train_sizes.empty()) throw ConfigError("learning_curve: no sizes given");
    const SplitIndices parts = split(y, {0.75, 0.25, 0.0}, derive_seed(seed, "lc.split"));

    // Order the pool so every prefix tracks the pool's class ratio.
    std::array<std::vector<std::size_t>, 2> pool;
    for (std::size_t i : parts.train) pool[y[i]].push_back(i);
    Rng rng(derive_seed(seed, "lc.order"));
    rng.shuffle(pool[0]);
    rng.shuffle(pool[1]);
    const std::size_t n_pool = pool[0].size() + pool[1].size();
    const double pos_frac = static_cast<double>(pool[1].size()) / static_cast<double>(n_pool);
    std::vector<std::size_t> ordered;
    std::size_t taken_pos = 0, taken_neg = 0;
    for (std::size_t t = 1; t <= n_pool; ++t) {
        const auto target_pos =
            static_cast<std::size_t>(std::llround(pos_frac * static_cast<double>(t)));
        if ((taken_pos < target_pos && taken_pos < pool[1].size()) || taken_neg == pool[0].size())
            ordered.push_back(pool[1][taken_pos++]);
        else
            ordered.push_back(pool[0][taken_neg++]);
    }

    const SparseMatrix x_val = row_slice(x, parts.val);
    const std::vector<int> y_val = detail::gather_labels(y, parts.val);

    std::vector<LearningCurvePoint> curve;
    for (std::size_t size : train_sizes) {
        if (size == 0 || size > n_pool)
            throw ConfigError("learning_curve: size must be in 1..pool size");
        const std::vector<std::size_t> subset(ordered.begin(), ordered.begin() + size);
        const SparseMatrix x_sub = row_slice(x, subset);
        const std::vector<int> y_sub = detail::gather_labels(y, subset);
        const Predictor predictor =
            pipeline(x_sub, y_sub, derive_seed(seed, "lc.size" + std::to_string(size)));

        LearningCurvePoint point;
        point.train_size = size;
        point.train_score = metrics(confusion(y_sub, predictor(x_sub)));
        point.val_score = metrics(confusion(y_val, predictor(x_val)));
        curve.push_back(point);
    }
    return curve;
}

// ---- report output ----

inline std::string metric_cell(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

inline void save_report_csv(std::ostream& os, const EvalReport& r) {
    os << "fold,acc,pre,rec,f1\n";
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        const Metrics& m = r.folds[f].m;
        os << f << ',' << fmt_double(m.accuracy) << ',' << metric_cell(m.precision) << ','
           << metric_cell(m.recall) << ',' << metric_cell(m.f1) << '\n';
    }
}

inline void save_learning_curve_csv(std::ostream& os,
                                    const std::vector<LearningCurvePoint>& curve) {
    os << "size,train_acc,val_acc,train_f1,val_f1\n";
    for (const auto& p : curve)
        os << p.train_size << ',' << fmt_double(p.train_score.accuracy) << ','
           << fmt_double(p.val_score.accuracy) << ',' << metric_cell(p.train_score.f1) << ','
           << metric_cell(p.val_score.f1) << '\n';
}

}  // namespace textae
