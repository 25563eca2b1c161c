#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/textio.hpp"

namespace textae {

enum class Norm { l2, none };

struct TfidfModel {
    std::vector<double> idf;  // one weight per vocabulary term
    Norm norm = Norm::l2;
    bool smooth = true;
    std::optional<std::vector<std::size_t>> selected;  // strictly increasing column mask
};

// idf_j = ln((1+N)/(1+df_j)) + 1 (smoothed) or ln(N/df_j) + 1.
inline TfidfModel fit_tfidf(const SparseMatrix& counts, bool smooth = true, Norm norm = Norm::l2) {
    if (counts.n_rows == 0 || counts.n_cols == 0) throw DomainError("fit_tfidf: empty counts");
    std::vector<std::size_t> df(counts.n_cols, 0);
    for (std::size_t i = 0; i < counts.n_rows; ++i)
        for (std::size_t k = counts.row_offsets[i]; k < counts.row_offsets[i + 1]; ++k)
            ++df[counts.col_indices[k]];
    TfidfModel m;
    m.norm = norm;
    m.smooth = smooth;
    m.idf.resize(counts.n_cols);
    const double n = static_cast<double>(counts.n_rows);
    for (std::size_t j = 0; j < counts.n_cols; ++j) {
        const double d = static_cast<double>(df[j]);
        m.idf[j] = smooth ? std::log((1.0 + n) / (1.0 + d)) + 1.0
                          : (d > 0.0 ? std::log(n / d) + 1.0 : 0.0);
    }
    return m;
}

// Entry (i,j) = count * idf_j, each row L2-normalized when norm = l2. The
// sparsity pattern is preserved; all-zero rows stay all-zero.
inline SparseMatrix transform_tfidf(const TfidfModel& m, const SparseMatrix& counts) {
    if (counts.n_cols != m.idf.size()) throw ShapeError("transform_tfidf: column count != idf length");
    SparseMatrix out = counts;
    for (std::size_t i = 0; i < out.n_rows; ++i) {
        const std::size_t begin = out.row_offsets[i], end = out.row_offsets[i + 1];
        for (std::size_t k = begin; k < end; ++k) out.values[k] *= m.idf[out.col_indices[k]];
        if (m.norm == Norm::l2) {
            double sq = 0.0;
            for (std::size_t k = begin; k < end; ++k) sq += out.values[k] * out.values[k];
            if (sq > 0.0) {
                const double inv = 1.0 / std::sqrt(sq);
                for (std::size_t k = begin; k < end; ++k) out.values[k] *= inv;
            }
        }
    }
    return out;
}

// Per-feature chi-squared statistic between class-summed feature mass
// (observed) and a class-prior-proportional expectation.
inline std::vector<double> chi2_scores(const SparseMatrix& x, const std::vector<int>& y) {
    if (x.n_rows != y.size()) throw ShapeError("chi2_scores: rows != labels");
    std::size_t n_pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw DomainError("chi2_scores: labels must be 0/1");
        n_pos += static_cast<std::size_t>(v);
    }
    if (n_pos == 0 || n_pos == y.size()) throw DomainError("chi2_scores: single-class labels");

    std::vector<double> mass_pos(x.n_cols, 0.0), mass_all(x.n_cols, 0.0);
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        for (std::size_t k = x.row_offsets[i]; k < x.row_offsets[i + 1]; ++k) {
            const double v = x.values[k];
            if (v < 0.0) throw DomainError("chi2_scores: negative feature value");
            mass_all[x.col_indices[k]] += v;
            if (y[i] == 1) mass_pos[x.col_indices[k]] += v;
        }
    }
    const double prior_pos = static_cast<double>(n_pos) / static_cast<double>(y.size());
    std::vector<double> scores(x.n_cols, 0.0);
    for (std::size_t j = 0; j < x.n_cols; ++j) {
        const double exp_pos = prior_pos * mass_all[j];
        const double exp_neg = (1.0 - prior_pos) * mass_all[j];
        if (exp_pos <= 0.0 || exp_neg <= 0.0) continue;  // empty feature
        const double obs_pos = mass_pos[j];
        const double obs_neg = mass_all[j] - mass_pos[j];
        scores[j] = (obs_pos - exp_pos) * (obs_pos - exp_pos) / exp_pos +
                    (obs_neg - exp_neg) * (obs_neg - exp_neg) / exp_neg;
    }
    return scores;
}

// Columns with the k largest scores, ties broken toward the lower column
// index. The returned index list is strictly increasing.
inline std::pair<SparseMatrix, std::vector<std::size_t>> select_k_best(
    const SparseMatrix& x, const std::vector<double>& scores, std::size_t k) {
    if (k == 0) throw DomainError("select_k_best: k must be positive");
    if (k > x.n_cols) throw DomainError("select_k_best: k exceeds column count");
    if (scores.size() != x.n_cols) throw ShapeError("select_k_best: scores length != columns");

    std::vector<std::size_t> order(x.n_cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    std::vector<std::size_t> keep(order.begin(), order.begin() + k);
    std::sort(keep.begin(), keep.end());
    return {col_select(x, keep), keep};
}

// ---- serialization (structured text) ----

inline void save_tfidf(std::ostream& os, const TfidfModel& m) {
    os << "tfidf v1\n";
    os << "n " << m.idf.size() << '\n';
    os << "norm " << (m.norm == Norm::l2 ? "l2" : "none") << '\n';
    os << "smooth " << (m.smooth ? 1 : 0) << '\n';
    os << "idf ";
    write_doubles(os, m.idf);
    if (m.selected) {
        os << "selected " << m.selected->size();
        for (std::size_t j : *m.selected) os << ' ' << j;
        os << '\n';
    } else {
        os << "selected none\n";
    }
}

inline TfidfModel load_tfidf(std::istream& is) {
    expect_token(is, "tfidf");
    expect_token(is, "v1");
    expect_token(is, "n");
    const auto n = read_value<std::size_t>(is, "idf length");
    TfidfModel m;
    expect_token(is, "norm");
    const auto norm = read_value<std::string>(is, "norm");
    if (norm == "l2")
        m.norm = Norm::l2;
    else if (norm == "none")
        m.norm = Norm::none;
    else
        throw IoError("tfidf: unknown norm '" + norm + "'");
    expect_token(is, "smooth");
    m.smooth = read_value<int>(is, "smooth flag") != 0;
    expect_token(is, "idf");
    m.idf = read_doubles(is, n);
    expect_token(is, "selected");
    std::string tag = read_value<std::string>(is, "selected count");
    if (tag != "none") {
        const std::size_t cnt = std::stoull(tag);
        std::vector<std::size_t> sel(cnt);
        for (std::size_t i = 0; i < cnt; ++i) sel[i] = read_value<std::size_t>(is, "selected index");
        m.selected = std::move(sel);
    }
    return m;
}

}  // namespace textae
