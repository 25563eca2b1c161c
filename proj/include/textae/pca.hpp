#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <ostream>
#include <vector>

#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/textio.hpp"

namespace textae {

struct PcaModel {
    std::vector<double> mean;  // column means of the fitted data
    DenseMatrix components;    // m x d, rows orthonormal, eigenvalue-descending
    std::vector<double> explained_variance;  // unbiased (n-1) estimator
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix held in `a`
// (row-major n x n). On return `a` is diagonal (eigenvalues) and `v`
// holds eigenvectors in columns.
inline void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, std::size_t n) {
    v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    if (n < 2) return;

    const auto off_diag = [&] {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a[p * n + q] * a[p * n + q];
        return s;
    };

    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(a[i * n + i]));
    const double tol = std::max(1e-300, 1e-24 * std::max(1.0, diag_scale * diag_scale));

    for (int sweep = 0; sweep < 100 && off_diag() > tol; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p];
                    const double vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}

// Fix each component's sign so its largest-magnitude coordinate is positive
// (earliest index wins a magnitude tie).
inline void canonical_sign(DenseMatrix& components) {
    for (std::size_t r = 0; r < components.n_rows; ++r) {
        double* row = components.row(r);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < components.n_cols; ++j)
            if (std::abs(row[j]) > std::abs(row[arg])) arg = j;
        if (row[arg] < 0.0)
            for (std::size_t j = 0; j < components.n_cols; ++j) row[j] = -row[j];
    }
}

}  // namespace detail

// Principal components of the centered data via eigendecomposition of the
// covariance (or the n x n Gram matrix when samples are fewer than
// features). Deterministic: cyclic Jacobi plus a fixed sign convention.
inline PcaModel fit_pca(const DenseMatrix& x, std::size_t m) {
    if (x.n_rows == 0 || x.n_cols == 0) throw DomainError("fit_pca: empty matrix");
    const std::size_t n = x.n_rows, d = x.n_cols;
    if (m > std::min(n, d))
        throw ConfigError("fit_pca: component count must be at most min(n_samples, n_features)");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) axpy(1.0, x.row(i), model.mean.data(), d);
    for (double& v : model.mean) v /= static_cast<double>(n);
    if (m == 0) {  // degenerate model: reconstruction is the column means
        model.components = DenseMatrix(0, d);
        return model;
    }

    DenseMatrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = x(i, j) - model.mean[j];

    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    model.components = DenseMatrix(m, d);
    model.explained_variance.assign(m, 0.0);

    if (d <= n) {
        // d x d covariance
        std::vector<double> cov(d * d, 0.0);
        DenseMatrix cov_m(d, d);
        mm_tn_acc(centered, centered, cov_m);
        for (std::size_t i = 0; i < d * d; ++i) cov[i] = cov_m.data[i] / denom;

        std::vector<double> vecs;
        detail::jacobi_eigen(cov, vecs, d);
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return cov[a * d + a] > cov[b * d + b];
        });
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t k = order[r];
            model.explained_variance[r] = std::max(0.0, cov[k * d + k]);
            for (std::size_t j = 0; j < d; ++j) model.components(r, j) = vecs[j * d + k];
        }
    } else {
        // Gram trick: eigenvectors u of (1/(n-1)) C C^T give components
        // C^T u / |C^T u| with the same nonzero eigenvalues.
        const DenseMatrix gram_m = mm_nt(centered, centered);
        std::vector<double> gram(gram_m.data);
        for (double& v : gram) v /= denom;

        std::vector<double> vecs;
        detail::jacobi_eigen(gram, vecs, n);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return gram[a * n + a] > gram[b * n + b];
        });
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t k = order[r];
            model.explained_variance[r] = std::max(0.0, gram[k * n + k]);
            double* comp = model.components.row(r);
            for (std::size_t i = 0; i < n; ++i)
                axpy(vecs[i * n + k], centered.row(i), comp, d);
            const double norm = std::sqrt(dot(comp, comp, d));
            if (norm > 0.0)
                for (std::size_t j = 0; j < d; ++j) comp[j] /= norm;
        }
    }
    detail::canonical_sign(model.components);
    return model;
}

// Project centered rows onto the components: scores = (x - mean) V^T.
inline DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x) {
    if (x.n_cols != model.components.n_cols) throw ShapeError("pca_transform: width mismatch");
    DenseMatrix centered(x.n_rows, x.n_cols);
    for (std::size_t i = 0; i < x.n_rows; ++i)
        for (std::size_t j = 0; j < x.n_cols; ++j) centered(i, j) = x(i, j) - model.mean[j];
    return mm_nt(centered, model.components);
}

// Map scores back: x' = scores V + mean.
inline DenseMatrix pca_inverse_transform(const PcaModel& model, const DenseMatrix& scores) {
    if (scores.n_cols != model.components.n_rows)
        throw ShapeError("pca_inverse_transform: score width mismatch");
    DenseMatrix x = mm_nn(scores, model.components);
    for (std::size_t i = 0; i < x.n_rows; ++i) axpy(1.0, model.mean.data(), x.row(i), x.n_cols);
    return x;
}

inline DenseMatrix pca_reconstruct(const PcaModel& model, const DenseMatrix& x) {
    return pca_inverse_transform(model, pca_transform(model, x));
}

inline void save_pca(std::ostream& os, const PcaModel& m) {
    os << "pca v1\n";
    os << m.components.n_rows << ' ' << m.components.n_cols << '\n';
    write_doubles(os, m.mean);
    write_doubles(os, m.explained_variance);
    for (std::size_t r = 0; r < m.components.n_rows; ++r) {
        for (std::size_t c = 0; c < m.components.n_cols; ++c)
            os << (c ? " " : "") << fmt_double(m.components(r, c));
        os << '\n';
    }
}

inline PcaModel load_pca(std::istream& is) {
    expect_token(is, "pca");
    expect_token(is, "v1");
    PcaModel m;
    const auto rows = read_value<std::size_t>(is, "component count");
    const auto cols = read_value<std::size_t>(is, "feature count");
    m.mean = read_doubles(is, cols);
    m.explained_variance = read_doubles(is, rows);
    m.components = DenseMatrix(rows, cols);
    for (auto& v : m.components.data) v = read_value<double>(is, "component");
    return m;
}

}  // namespace textae
