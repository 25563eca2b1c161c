#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <tuple>
#include <vector>

#include "textae/error.hpp"
#include "textae/textio.hpp"

namespace textae {

// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : n_rows(r), n_cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * n_cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }
    double* row(std::size_t i) { return data.data() + i * n_cols; }
    const double* row(std::size_t i) const { return data.data() + i * n_cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Compressed sparse row matrix. Canonical form: column indices strictly
// increasing within each row, no explicitly stored zeros.
struct SparseMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::size_t> row_offsets;  // length n_rows + 1
    std::vector<std::size_t> col_indices;
    std::vector<double> values;

    SparseMatrix() : row_offsets(1, 0) {}
    SparseMatrix(std::size_t r, std::size_t c) : n_rows(r), n_cols(c), row_offsets(r + 1, 0) {}

    std::size_t nnz() const { return values.size(); }

    // Duplicate (row, col) entries are summed; zeros (including sums that
    // cancel) are dropped.
    static SparseMatrix from_triplets(std::size_t r, std::size_t c,
                                      std::vector<std::tuple<std::size_t, std::size_t, double>> t) {
        for (const auto& [i, j, v] : t) {
            (void)v;
            if (i >= r) throw IndexError("triplet row out of range");
            if (j >= c) throw IndexError("triplet col out of range");
        }
        std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(a), std::get<1>(a)) <
                   std::tie(std::get<0>(b), std::get<1>(b));
        });
        SparseMatrix m(r, c);
        std::size_t k = 0;
        for (std::size_t row = 0; row < r; ++row) {
            while (k < t.size() && std::get<0>(t[k]) == row) {
                const std::size_t col = std::get<1>(t[k]);
                double sum = 0.0;
                while (k < t.size() && std::get<0>(t[k]) == row && std::get<1>(t[k]) == col)
                    sum += std::get<2>(t[k++]);
                if (sum != 0.0) {
                    m.col_indices.push_back(col);
                    m.values.push_back(sum);
                }
            }
            m.row_offsets[row + 1] = m.values.size();
        }
        return m;
    }

    static SparseMatrix from_dense(const DenseMatrix& d) {
        SparseMatrix m(d.n_rows, d.n_cols);
        for (std::size_t i = 0; i < d.n_rows; ++i) {
            for (std::size_t j = 0; j < d.n_cols; ++j) {
                const double v = d(i, j);
                if (v != 0.0) {
                    m.col_indices.push_back(j);
                    m.values.push_back(v);
                }
            }
            m.row_offsets[i + 1] = m.values.size();
        }
        return m;
    }

    // Invariant check used by tests and the text loader.
    void check() const {
        if (row_offsets.size() != n_rows + 1) throw DataError("bad row_offsets length");
        if (row_offsets.front() != 0) throw DataError("row_offsets[0] != 0");
        if (row_offsets.back() != values.size()) throw DataError("last offset != nnz");
        if (col_indices.size() != values.size()) throw DataError("indices/values length mismatch");
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (row_offsets[i] > row_offsets[i + 1]) throw DataError("row_offsets not monotone");
            for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
                if (col_indices[k] >= n_cols) throw DataError("column index out of range");
                if (k > row_offsets[i] && col_indices[k - 1] >= col_indices[k])
                    throw DataError("column indices not strictly increasing");
                if (values[k] == 0.0) throw DataError("stored zero");
            }
        }
    }
};

inline DenseMatrix to_dense(const SparseMatrix& m) {
    DenseMatrix d(m.n_rows, m.n_cols);
    for (std::size_t i = 0; i < m.n_rows; ++i)
        for (std::size_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
            d(i, m.col_indices[k]) = m.values[k];
    return d;
}

inline DenseMatrix spmm_dense(const SparseMatrix& a, const DenseMatrix& b) {
    if (a.n_cols != b.n_rows) throw ShapeError("spmm_dense: inner dimensions differ");
    DenseMatrix c(a.n_rows, b.n_cols);
    for (std::size_t i = 0; i < a.n_rows; ++i) {
        double* out = c.row(i);
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
            const double v = a.values[k];
            const double* brow = b.row(a.col_indices[k]);
            for (std::size_t j = 0; j < b.n_cols; ++j) out[j] += v * brow[j];
        }
    }
    return c;
}

// Fraction of zero entries (1 - nnz/total), counting canonical nonzeros.
inline double sparsity(const SparseMatrix& m) {
    if (m.n_rows == 0 || m.n_cols == 0) throw DomainError("sparsity: empty matrix");
    const double total = static_cast<double>(m.n_rows) * static_cast<double>(m.n_cols);
    return 1.0 - static_cast<double>(m.nnz()) / total;
}

inline double density(const SparseMatrix& m) { return 1.0 - sparsity(m); }

// New matrix holding exactly the selected rows, in the given order.
inline SparseMatrix row_slice(const SparseMatrix& m, const std::vector<std::size_t>& rows) {
    for (std::size_t r : rows)
        if (r >= m.n_rows) throw IndexError("row_slice: row index out of range");
    SparseMatrix out(rows.size(), m.n_cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        for (std::size_t k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            out.col_indices.push_back(m.col_indices[k]);
            out.values.push_back(m.values[k]);
        }
        out.row_offsets[i + 1] = out.values.size();
    }
    return out;
}

// Column subset, columns copied verbatim in the order given (callers pass
// strictly increasing index lists).
inline SparseMatrix col_select(const SparseMatrix& m, const std::vector<std::size_t>& cols) {
    std::vector<std::size_t> remap(m.n_cols, static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] >= m.n_cols) throw IndexError("col_select: column index out of range");
        remap[cols[i]] = i;
    }
    SparseMatrix out(m.n_rows, cols.size());
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        for (std::size_t k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            const std::size_t j = remap[m.col_indices[k]];
            if (j != static_cast<std::size_t>(-1)) {
                out.col_indices.push_back(j);
                out.values.push_back(m.values[k]);
            }
        }
        out.row_offsets[r + 1] = out.values.size();
    }
    return out;
}

// Three-array text format:
//   sparse v1
//   <n_rows> <n_cols> <nnz>
//   offsets line (n_rows+1 integers)
//   indices line (nnz integers)
//   values line (nnz doubles, 17 significant digits)
inline void save_sparse(std::ostream& os, const SparseMatrix& m) {
    os << "sparse v1\n" << m.n_rows << ' ' << m.n_cols << ' ' << m.nnz() << '\n';
    for (std::size_t i = 0; i < m.row_offsets.size(); ++i)
        os << (i ? " " : "") << m.row_offsets[i];
    os << '\n';
    for (std::size_t i = 0; i < m.col_indices.size(); ++i)
        os << (i ? " " : "") << m.col_indices[i];
    os << '\n';
    write_doubles(os, m.values);
}

inline SparseMatrix load_sparse(std::istream& is) {
    expect_token(is, "sparse");
    expect_token(is, "v1");
    const auto r = read_value<std::size_t>(is, "n_rows");
    const auto c = read_value<std::size_t>(is, "n_cols");
    const auto nnz = read_value<std::size_t>(is, "nnz");
    SparseMatrix m(r, c);
    for (std::size_t i = 0; i <= r; ++i)
        m.row_offsets[i] = read_value<std::size_t>(is, "row offset");
    m.col_indices.resize(nnz);
    for (std::size_t i = 0; i < nnz; ++i)
        m.col_indices[i] = read_value<std::size_t>(is, "col index");
    m.values = read_doubles(is, nnz);
    m.check();
    return m;
}

// ---- dense kernels shared by the numeric modules ----

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// C = A * B^T  (A: m x k, B: n x k) -> m x n
inline DenseMatrix mm_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.n_cols != b.n_cols) throw ShapeError("mm_nt: inner dimensions differ");
    DenseMatrix c(a.n_rows, b.n_rows);
    for (std::size_t i = 0; i < a.n_rows; ++i)
        for (std::size_t j = 0; j < b.n_rows; ++j)
            c(i, j) = dot(a.row(i), b.row(j), a.n_cols);
    return c;
}

// C = A * B  (A: m x k, B: k x n) -> m x n
inline DenseMatrix mm_nn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.n_cols != b.n_rows) throw ShapeError("mm_nn: inner dimensions differ");
    DenseMatrix c(a.n_rows, b.n_cols);
    for (std::size_t i = 0; i < a.n_rows; ++i) {
        double* out = c.row(i);
        const double* arow = a.row(i);
        for (std::size_t k = 0; k < a.n_cols; ++k) axpy(arow[k], b.row(k), out, b.n_cols);
    }
    return c;
}

// C += X^T * Y  (X: b x m, Y: b x n), accumulates into an m x n matrix
inline void mm_tn_acc(const DenseMatrix& x, const DenseMatrix& y, DenseMatrix& c) {
    if (x.n_rows != y.n_rows || c.n_rows != x.n_cols || c.n_cols != y.n_cols)
        throw ShapeError("mm_tn_acc: dimension mismatch");
    for (std::size_t b = 0; b < x.n_rows; ++b) {
        const double* xrow = x.row(b);
        const double* yrow = y.row(b);
        for (std::size_t i = 0; i < x.n_cols; ++i)
            if (xrow[i] != 0.0) axpy(xrow[i], yrow, c.row(i), y.n_cols);
    }
}

inline DenseMatrix dense_rows(const DenseMatrix& m, const std::vector<std::size_t>& rows) {
    DenseMatrix out(rows.size(), m.n_cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.n_rows) throw IndexError("dense_rows: row index out of range");
        std::copy(m.row(rows[i]), m.row(rows[i]) + m.n_cols, out.row(i));
    }
    return out;
}

}  // namespace textae
