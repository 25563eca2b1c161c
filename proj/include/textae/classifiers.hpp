#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "textae/autoencoder.hpp"  // sigmoid, Rng-based init helpers
#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/rng.hpp"
#include "textae/textio.hpp"

namespace textae {

enum class ClassifierKind { logreg, gaussian_nb, multinomial_nb, mlp };

inline const char* classifier_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::logreg: return "logreg";
        case ClassifierKind::gaussian_nb: return "gaussian_nb";
        case ClassifierKind::multinomial_nb: return "multinomial_nb";
        case ClassifierKind::mlp: return "mlp";
    }
    throw ConfigError("unknown classifier kind");
}

inline ClassifierKind classifier_from_name(const std::string& s) {
    if (s == "logreg") return ClassifierKind::logreg;
    if (s == "gaussian_nb") return ClassifierKind::gaussian_nb;
    if (s == "multinomial_nb") return ClassifierKind::multinomial_nb;
    if (s == "mlp") return ClassifierKind::mlp;
    throw ConfigError("unknown classifier '" + s + "'");
}

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::logreg;
    // logistic regression: full-batch gradient descent on the regularized
    // negative log-likelihood; l2_c is the inverse penalty strength (the
    // usual C), objective mean_CE + ||w||^2 / (2 * l2_c * N).
    double l2_c = 1.0;
    std::size_t logreg_iters = 500;
    double logreg_lr = 0.1;
    // naive Bayes
    double alpha = 1.0;       // multinomial Laplace smoothing
    double var_floor = 1e-9;  // gaussian variance floor
    // mlp: one rectifier hidden layer, softmax output, cross-entropy, adam
    std::size_t hidden_units = 64;
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    double mlp_lr = 0.001;
    std::uint64_t seed = 0;

    void validate() const {
        if (l2_c <= 0.0) throw ConfigError("l2_c must be positive");
        if (alpha <= 0.0) throw ConfigError("alpha must be positive");
        if (var_floor <= 0.0) throw ConfigError("var_floor must be positive");
        if (hidden_units < 1) throw ConfigError("hidden_units must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        if (!(logreg_lr > 0.0) || !(mlp_lr > 0.0)) throw ConfigError("learning rates must be positive");
    }
};

struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::logreg;
    std::size_t n_features = 0;
    // logreg
    std::vector<double> lr_w;
    double lr_b = 0.0;
    // shared by both naive Bayes variants
    std::array<double, 2> log_prior{0.0, 0.0};
    // gaussian nb
    std::array<std::vector<double>, 2> g_mean, g_var;
    // multinomial nb
    std::array<std::vector<double>, 2> mnb_log_theta;
    // mlp
    DenseMatrix mlp_w1, mlp_w2;  // (h x d), (2 x h)
    std::vector<double> mlp_b1, mlp_b2;
};

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

inline void check_binary_labels(const std::vector<int>& y, std::size_t n_rows) {
    if (y.size() != n_rows) throw ShapeError("labels: length != sample count");
    bool seen[2] = {false, false};
    for (int v : y) {
        if (v != 0 && v != 1) throw DomainError("labels must be 0 or 1");
        seen[v] = true;
    }
    if (!seen[0] || !seen[1]) throw DomainError("both classes must be present");
}

// log(1 + e^t) without overflow
inline double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

}  // namespace detail

// ---- logistic regression ----

// J(w, b) = (1/N) sum_i CE_i + ||w||^2 / (2 c N); bias unpenalized.
inline double logreg_objective(const std::vector<double>& w, double b, const DenseMatrix& x,
                               const std::vector<int>& y, double c) {
    double j = 0.0;
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        const double z = dot(w.data(), x.row(i), x.n_cols) + b;
        j += y[i] == 1 ? detail::softplus(-z) : detail::softplus(z);
    }
    const double n = static_cast<double>(x.n_rows);
    return j / n + dot(w.data(), w.data(), w.size()) / (2.0 * c * n);
}

inline void logreg_gradient(const std::vector<double>& w, double b, const DenseMatrix& x,
                            const std::vector<int>& y, double c, std::vector<double>& grad_w,
                            double& grad_b) {
    const double n = static_cast<double>(x.n_rows);
    grad_w.assign(w.size(), 0.0);
    grad_b = 0.0;
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        const double p = sigmoid(dot(w.data(), x.row(i), x.n_cols) + b);
        const double r = (p - static_cast<double>(y[i])) / n;
        axpy(r, x.row(i), grad_w.data(), x.n_cols);
        grad_b += r;
    }
    axpy(1.0 / (c * n), w.data(), grad_w.data(), w.size());
}

inline ClassifierModel fit_logreg(const DenseMatrix& x, const std::vector<int>& y,
                                  const ClassifierConfig& cfg) {
    detail::check_binary_labels(y, x.n_rows);
    ClassifierModel m;
    m.kind = ClassifierKind::logreg;
    m.n_features = x.n_cols;
    m.lr_w.assign(x.n_cols, 0.0);
    m.lr_b = 0.0;
    std::vector<double> gw;
    double gb = 0.0;
    for (std::size_t it = 0; it < cfg.logreg_iters; ++it) {
        logreg_gradient(m.lr_w, m.lr_b, x, y, cfg.l2_c, gw, gb);
        axpy(-cfg.logreg_lr, gw.data(), m.lr_w.data(), gw.size());
        m.lr_b -= cfg.logreg_lr * gb;
    }
    for (double v : m.lr_w)
        if (!std::isfinite(v)) throw DomainError("logreg: non-finite weights after fitting");
    return m;
}

// ---- gaussian naive Bayes ----

inline ClassifierModel fit_gaussian_nb(const DenseMatrix& x, const std::vector<int>& y,
                                       const ClassifierConfig& cfg) {
    detail::check_binary_labels(y, x.n_rows);
    ClassifierModel m;
    m.kind = ClassifierKind::gaussian_nb;
    m.n_features = x.n_cols;
    std::array<std::size_t, 2> count{0, 0};
    for (int c = 0; c < 2; ++c) {
        m.g_mean[c].assign(x.n_cols, 0.0);
        m.g_var[c].assign(x.n_cols, 0.0);
    }
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        ++count[y[i]];
        axpy(1.0, x.row(i), m.g_mean[y[i]].data(), x.n_cols);
    }
    for (int c = 0; c < 2; ++c)
        for (double& v : m.g_mean[c]) v /= static_cast<double>(count[c]);
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        const int c = y[i];
        const double* row = x.row(i);
        for (std::size_t j = 0; j < x.n_cols; ++j) {
            const double d = row[j] - m.g_mean[c][j];
            m.g_var[c][j] += d * d;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (double& v : m.g_var[c]) v = std::max(v / static_cast<double>(count[c]), cfg.var_floor);
        m.log_prior[c] =
            std::log(static_cast<double>(count[c]) / static_cast<double>(x.n_rows));
    }
    return m;
}

// ---- multinomial naive Bayes ----

inline ClassifierModel fit_multinomial_nb(const DenseMatrix& x, const std::vector<int>& y,
                                          const ClassifierConfig& cfg) {
    detail::check_binary_labels(y, x.n_rows);
    for (double v : x.data)
        if (v < 0.0) throw DomainError("multinomial_nb requires nonnegative features");
    ClassifierModel m;
    m.kind = ClassifierKind::multinomial_nb;
    m.n_features = x.n_cols;
    std::array<std::vector<double>, 2> mass;
    std::array<std::size_t, 2> count{0, 0};
    mass[0].assign(x.n_cols, 0.0);
    mass[1].assign(x.n_cols, 0.0);
    for (std::size_t i = 0; i < x.n_rows; ++i) {
        ++count[y[i]];
        axpy(1.0, x.row(i), mass[y[i]].data(), x.n_cols);
    }
    for (int c = 0; c < 2; ++c) {
        double total = 0.0;
        for (double v : mass[c]) total += v;
        const double denom = total + cfg.alpha * static_cast<double>(x.n_cols);
        m.mnb_log_theta[c].resize(x.n_cols);
        for (std::size_t j = 0; j < x.n_cols; ++j)
            m.mnb_log_theta[c][j] = std::log((mass[c][j] + cfg.alpha) / denom);
        m.log_prior[c] =
            std::log(static_cast<double>(count[c]) / static_cast<double>(x.n_rows));
    }
    return m;
}

// ---- mlp ----

inline ClassifierModel fit_mlp(const DenseMatrix& x, const std::vector<int>& y,
                               const ClassifierConfig& cfg) {
    detail::check_binary_labels(y, x.n_rows);
    cfg.validate();
    ClassifierModel m;
    m.kind = ClassifierKind::mlp;
    m.n_features = x.n_cols;

    Rng init_rng(derive_seed(cfg.seed, "mlp.init"));
    const auto glorot = [&](std::size_t out, std::size_t in) {
        DenseMatrix w(out, in);
        const double sd = std::sqrt(2.0 / static_cast<double>(in + out));
        for (double& v : w.data) v = sd * init_rng.normal();
        return w;
    };
    m.mlp_w1 = glorot(cfg.hidden_units, x.n_cols);
    m.mlp_w2 = glorot(2, cfg.hidden_units);
    m.mlp_b1.assign(cfg.hidden_units, 0.0);
    m.mlp_b2.assign(2, 0.0);

    const std::size_t n = x.n_rows, h = cfg.hidden_units;
    detail::AdamState s_w1(m.mlp_w1.data.size()), s_b1(h), s_w2(m.mlp_w2.data.size()), s_b2(2);
    Rng shuffle_rng(derive_seed(cfg.seed, "mlp.shuffle"));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(perm);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::vector<std::size_t> rows(perm.begin() + start, perm.begin() + stop);
            const DenseMatrix xb = dense_rows(x, rows);
            const std::size_t b = rows.size();

            DenseMatrix hid = mm_nt(xb, m.mlp_w1);
            for (std::size_t i = 0; i < b; ++i) axpy(1.0, m.mlp_b1.data(), hid.row(i), h);
            for (double& v : hid.data) v = std::max(0.0, v);
            DenseMatrix out = mm_nt(hid, m.mlp_w2);
            for (std::size_t i = 0; i < b; ++i) axpy(1.0, m.mlp_b2.data(), out.row(i), 2);

            // d_out = (softmax - onehot) / b
            DenseMatrix d_out(b, 2);
            for (std::size_t i = 0; i < b; ++i) {
                const double mx = std::max(out(i, 0), out(i, 1));
                const double e0 = std::exp(out(i, 0) - mx), e1 = std::exp(out(i, 1) - mx);
                const double z = e0 + e1;
                d_out(i, 0) = (e0 / z - (y[rows[i]] == 0 ? 1.0 : 0.0)) / static_cast<double>(b);
                d_out(i, 1) = (e1 / z - (y[rows[i]] == 1 ? 1.0 : 0.0)) / static_cast<double>(b);
            }
            DenseMatrix g_w2(2, h);
            mm_tn_acc(d_out, hid, g_w2);
            std::vector<double> g_b2(2, 0.0);
            for (std::size_t i = 0; i < b; ++i) axpy(1.0, d_out.row(i), g_b2.data(), 2);
            DenseMatrix d_hid = mm_nn(d_out, m.mlp_w2);
            for (std::size_t i = 0; i < d_hid.data.size(); ++i)
                if (hid.data[i] <= 0.0) d_hid.data[i] = 0.0;
            DenseMatrix g_w1(h, x.n_cols);
            mm_tn_acc(d_hid, xb, g_w1);
            std::vector<double> g_b1(h, 0.0);
            for (std::size_t i = 0; i < b; ++i) axpy(1.0, d_hid.row(i), g_b1.data(), h);

            ++step;
            TrainConfig ad;  // reuse the adam stepper with its (0.9, 0.999, 1e-8) defaults
            ad.learning_rate = cfg.mlp_lr;
            const double bc1 = 1.0 - std::pow(ad.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(ad.beta2, static_cast<double>(step));
            detail::adam_step(m.mlp_w1.data, g_w1.data, s_w1, ad, bc1, bc2);
            detail::adam_step(m.mlp_b1, g_b1, s_b1, ad, bc1, bc2);
            detail::adam_step(m.mlp_w2.data, g_w2.data, s_w2, ad, bc1, bc2);
            detail::adam_step(m.mlp_b2, g_b2, s_b2, ad, bc1, bc2);
        }
    }
    if (!m.mlp_w1.all_finite() || !m.mlp_w2.all_finite())
        throw DomainError("mlp: non-finite weights after fitting");
    return m;
}

// ---- shared interface ----

inline ClassifierModel fit_classifier(const DenseMatrix& x, const std::vector<int>& y,
                                      const ClassifierConfig& cfg) {
    cfg.validate();
    switch (cfg.kind) {
        case ClassifierKind::logreg: return fit_logreg(x, y, cfg);
        case ClassifierKind::gaussian_nb: return fit_gaussian_nb(x, y, cfg);
        case ClassifierKind::multinomial_nb: return fit_multinomial_nb(x, y, cfg);
        case ClassifierKind::mlp: return fit_mlp(x, y, cfg);
    }
    throw ConfigError("unknown classifier kind");
}

inline ClassifierModel fit_classifier(const SparseMatrix& x, const std::vector<int>& y,
                                      const ClassifierConfig& cfg) {
    return fit_classifier(to_dense(x), y, cfg);
}

// n x 2 class probabilities; rows sum to 1.
inline DenseMatrix predict_proba(const ClassifierModel& m, const DenseMatrix& x) {
    if (x.n_cols != m.n_features) throw ShapeError("predict: feature width differs from training");
    DenseMatrix p(x.n_rows, 2);
    switch (m.kind) {
        case ClassifierKind::logreg:
            for (std::size_t i = 0; i < x.n_rows; ++i) {
                const double p1 = sigmoid(dot(m.lr_w.data(), x.row(i), x.n_cols) + m.lr_b);
                p(i, 0) = 1.0 - p1;
                p(i, 1) = p1;
            }
            break;
        case ClassifierKind::gaussian_nb:
            for (std::size_t i = 0; i < x.n_rows; ++i) {
                double lp[2];
                for (int c = 0; c < 2; ++c) {
                    double s = m.log_prior[c];
                    const double* row = x.row(i);
                    for (std::size_t j = 0; j < x.n_cols; ++j) {
                        const double v = m.g_var[c][j];
                        const double d = row[j] - m.g_mean[c][j];
                        s += -0.5 * std::log(2.0 * detail::kPi * v) - d * d / (2.0 * v);
                    }
                    lp[c] = s;
                }
                const double mx = std::max(lp[0], lp[1]);
                const double e0 = std::exp(lp[0] - mx), e1 = std::exp(lp[1] - mx);
                p(i, 0) = e0 / (e0 + e1);
                p(i, 1) = e1 / (e0 + e1);
            }
            break;
        case ClassifierKind::multinomial_nb:
            for (std::size_t i = 0; i < x.n_rows; ++i) {
                double lp[2];
                for (int c = 0; c < 2; ++c)
                    lp[c] = m.log_prior[c] +
                            dot(m.mnb_log_theta[c].data(), x.row(i), x.n_cols);
                const double mx = std::max(lp[0], lp[1]);
                const double e0 = std::exp(lp[0] - mx), e1 = std::exp(lp[1] - mx);
                p(i, 0) = e0 / (e0 + e1);
                p(i, 1) = e1 / (e0 + e1);
            }
            break;
        case ClassifierKind::mlp: {
            DenseMatrix hid = mm_nt(x, m.mlp_w1);
            for (std::size_t i = 0; i < x.n_rows; ++i)
                axpy(1.0, m.mlp_b1.data(), hid.row(i), m.mlp_b1.size());
            for (double& v : hid.data) v = std::max(0.0, v);
            DenseMatrix out = mm_nt(hid, m.mlp_w2);
            for (std::size_t i = 0; i < x.n_rows; ++i) {
                const double z0 = out(i, 0) + m.mlp_b2[0], z1 = out(i, 1) + m.mlp_b2[1];
                const double mx = std::max(z0, z1);
                const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
                p(i, 0) = e0 / (e0 + e1);
                p(i, 1) = e1 / (e0 + e1);
            }
            break;
        }
    }
    return p;
}

inline DenseMatrix predict_proba(const ClassifierModel& m, const SparseMatrix& x) {
    return predict_proba(m, to_dense(x));
}

// argmax class; the exact tie goes to class 0.
inline std::vector<int> predict(const ClassifierModel& m, const DenseMatrix& x) {
    const DenseMatrix p = predict_proba(m, x);
    std::vector<int> out(x.n_rows);
    for (std::size_t i = 0; i < x.n_rows; ++i) out[i] = p(i, 1) > p(i, 0) ? 1 : 0;
    return out;
}

inline std::vector<int> predict(const ClassifierModel& m, const SparseMatrix& x) {
    return predict(m, to_dense(x));
}

// ---- serialization ----

inline void save_classifier(std::ostream& os, const ClassifierModel& m) {
    os << "classifier v1\n";
    os << classifier_name(m.kind) << ' ' << m.n_features << '\n';
    const auto write_matrix = [&](const DenseMatrix& w) {
        os << w.n_rows << ' ' << w.n_cols << '\n';
        for (std::size_t r = 0; r < w.n_rows; ++r) {
            for (std::size_t c = 0; c < w.n_cols; ++c) os << (c ? " " : "") << fmt_double(w(r, c));
            os << '\n';
        }
    };
    switch (m.kind) {
        case ClassifierKind::logreg:
            write_doubles(os, m.lr_w);
            os << fmt_double(m.lr_b) << '\n';
            break;
        case ClassifierKind::gaussian_nb:
            os << fmt_double(m.log_prior[0]) << ' ' << fmt_double(m.log_prior[1]) << '\n';
            for (int c = 0; c < 2; ++c) {
                write_doubles(os, m.g_mean[c]);
                write_doubles(os, m.g_var[c]);
            }
            break;
        case ClassifierKind::multinomial_nb:
            os << fmt_double(m.log_prior[0]) << ' ' << fmt_double(m.log_prior[1]) << '\n';
            for (int c = 0; c < 2; ++c) write_doubles(os, m.mnb_log_theta[c]);
            break;
        case ClassifierKind::mlp:
            write_matrix(m.mlp_w1);
            write_doubles(os, m.mlp_b1);
            write_matrix(m.mlp_w2);
            write_doubles(os, m.mlp_b2);
            break;
    }
}

inline ClassifierModel load_classifier(std::istream& is) {
    expect_token(is, "classifier");
    expect_token(is, "v1");
    ClassifierModel m;
    m.kind = classifier_from_name(read_value<std::string>(is, "classifier kind"));
    m.n_features = read_value<std::size_t>(is, "feature count");
    const auto read_matrix = [&] {
        const auto r = read_value<std::size_t>(is, "rows");
        const auto c = read_value<std::size_t>(is, "cols");
        DenseMatrix w(r, c);
        for (auto& v : w.data) v = read_value<double>(is, "weight");
        return w;
    };
    switch (m.kind) {
        case ClassifierKind::logreg:
            m.lr_w = read_doubles(is, m.n_features);
            m.lr_b = read_value<double>(is, "bias");
            break;
        case ClassifierKind::gaussian_nb:
            m.log_prior[0] = read_value<double>(is, "prior");
            m.log_prior[1] = read_value<double>(is, "prior");
            for (int c = 0; c < 2; ++c) {
                m.g_mean[c] = read_doubles(is, m.n_features);
                m.g_var[c] = read_doubles(is, m.n_features);
            }
            break;
        case ClassifierKind::multinomial_nb:
            m.log_prior[0] = read_value<double>(is, "prior");
            m.log_prior[1] = read_value<double>(is, "prior");
            for (int c = 0; c < 2; ++c) m.mnb_log_theta[c] = read_doubles(is, m.n_features);
            break;
        case ClassifierKind::mlp:
            m.mlp_w1 = read_matrix();
            m.mlp_b1 = read_doubles(is, m.mlp_w1.n_rows);
            m.mlp_w2 = read_matrix();
            m.mlp_b2 = read_doubles(is, m.mlp_w2.n_rows);
            break;
    }
    return m;
}

}  // namespace textae
