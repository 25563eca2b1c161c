#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/rng.hpp"
#include "textae/textio.hpp"

namespace textae {

enum class Activation { sigmoid, linear };
enum class Optimizer { sgd, adam };

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline const char* activation_name(Activation a) {
    return a == Activation::sigmoid ? "sigmoid" : "linear";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "linear") return Activation::linear;
    throw IoError("unknown activation '" + s + "'");
}

// Training hyperparameters. hidden_layers counts the encoder-side hidden
// layers with the bottleneck included, so the full mirrored network has
// 2*hidden_layers - 1 hidden layers; neurons is the width of the
// non-bottleneck hidden layers.
struct TrainConfig {
    std::size_t hidden_layers = 1;
    std::size_t neurons = 100;
    std::size_t latent_dim = 16;
    Activation activation = Activation::sigmoid;          // encoder side
    Activation decoder_activation = Activation::sigmoid;  // linear on both sides = LAE
    bool tied = true;
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-5;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    // The reference grid keeps learning_rate in [0.001, 0.01]; zero is also
    // accepted (null step), so the enforced bound is [0, 0.1].
    void validate() const {
        if (hidden_layers < 1 || hidden_layers > 3)
            throw ConfigError("hidden_layers must be in 1..3");
        if (neurons < 1 || neurons > 500) throw ConfigError("neurons must be in 1..500");
        if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
        if (!(learning_rate >= 0.0 && learning_rate <= 0.1))
            throw ConfigError("learning_rate must be in [0, 0.1]");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in [0, 1)");
        if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw ConfigError("epsilon must be in (0, 1e-3]");
        if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
    }
};

// Mirrored feedforward autoencoder. Encoder layer i maps layer_widths[i] ->
// layer_widths[i+1]; when tied, decoder layer j reuses encoder weight
// L-1-j transposed (single storage).
struct AutoencoderModel {
    std::vector<std::size_t> layer_widths;  // D, hiddens..., M, hiddens..., D
    std::vector<DenseMatrix> enc_weights;   // enc_weights[i]: (w[i+1] x w[i])
    std::vector<std::vector<double>> enc_biases;
    std::vector<DenseMatrix> dec_weights;   // empty when tied; dec_weights[j]: (w[L-1-j] x w[L-j])
    std::vector<std::vector<double>> dec_biases;
    bool tied = true;
    Activation enc_activation = Activation::sigmoid;
    Activation dec_activation = Activation::sigmoid;

    std::size_t depth() const { return enc_weights.size(); }  // encoder layer count L
    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t latent_width() const { return layer_widths[depth()]; }

    bool all_finite() const {
        for (const auto& w : enc_weights)
            if (!w.all_finite()) return false;
        for (const auto& w : dec_weights)
            if (!w.all_finite()) return false;
        for (const auto& b : enc_biases)
            for (double v : b)
                if (!std::isfinite(v)) return false;
        for (const auto& b : dec_biases)
            for (double v : b)
                if (!std::isfinite(v)) return false;
        return true;
    }
};

// Glorot-normal weights (variance 2/(fan_in+fan_out)), zero biases,
// deterministic under cfg.seed.
inline AutoencoderModel init_model(std::size_t d_input, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.latent_dim >= d_input) throw ConfigError("bottleneck must be narrower than the input");

    AutoencoderModel m;
    m.tied = cfg.tied;
    m.enc_activation = cfg.activation;
    m.dec_activation = cfg.decoder_activation;

    std::vector<std::size_t> enc_widths;
    enc_widths.push_back(d_input);
    for (std::size_t i = 1; i < cfg.hidden_layers; ++i) enc_widths.push_back(cfg.neurons);
    enc_widths.push_back(cfg.latent_dim);
    const std::size_t L = enc_widths.size() - 1;

    m.layer_widths = enc_widths;
    for (std::size_t i = L; i-- > 0;) m.layer_widths.push_back(enc_widths[i]);

    Rng rng(derive_seed(cfg.seed, "init"));
    const auto glorot = [&](std::size_t out, std::size_t in) {
        DenseMatrix w(out, in);
        const double sd = std::sqrt(2.0 / static_cast<double>(in + out));
        for (double& v : w.data) v = sd * rng.normal();
        return w;
    };
    for (std::size_t i = 0; i < L; ++i) {
        m.enc_weights.push_back(glorot(enc_widths[i + 1], enc_widths[i]));
        m.enc_biases.emplace_back(enc_widths[i + 1], 0.0);
    }
    for (std::size_t j = 0; j < L; ++j) {
        if (!cfg.tied) m.dec_weights.push_back(glorot(enc_widths[L - 1 - j], enc_widths[L - j]));
        m.dec_biases.emplace_back(enc_widths[L - 1 - j], 0.0);
    }
    return m;
}

namespace detail {

inline void apply_activation(DenseMatrix& a, Activation act) {
    if (act == Activation::linear) return;
    for (double& v : a.data) v = sigmoid(v);
}

inline void add_bias(DenseMatrix& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.n_rows; ++i) axpy(1.0, b.data(), a.row(i), a.n_cols);
}

// derivative of the activation expressed through its output value
inline double act_deriv(double out, Activation act) {
    return act == Activation::linear ? 1.0 : out * (1.0 - out);
}

inline const DenseMatrix& dec_weight(const AutoencoderModel& m, std::size_t j) {
    return m.tied ? m.enc_weights[m.depth() - 1 - j] : m.dec_weights[j];
}

}  // namespace detail

// Activations of every layer: index 0 is the input batch, 1..L the encoder
// outputs (L = bottleneck), L+1..2L the decoder outputs.
inline std::vector<DenseMatrix> forward_all(const AutoencoderModel& m, const DenseMatrix& x) {
    if (x.n_cols != m.input_dim()) throw ShapeError("forward: input width != model input");
    const std::size_t L = m.depth();
    std::vector<DenseMatrix> act;
    act.reserve(2 * L + 1);
    act.push_back(x);
    for (std::size_t i = 0; i < L; ++i) {
        DenseMatrix a = mm_nt(act.back(), m.enc_weights[i]);
        detail::add_bias(a, m.enc_biases[i]);
        detail::apply_activation(a, m.enc_activation);
        act.push_back(std::move(a));
    }
    for (std::size_t j = 0; j < L; ++j) {
        DenseMatrix a = m.tied ? mm_nn(act.back(), m.enc_weights[L - 1 - j])
                               : mm_nt(act.back(), m.dec_weights[j]);
        detail::add_bias(a, m.dec_biases[j]);
        detail::apply_activation(a, m.dec_activation);
        act.push_back(std::move(a));
    }
    return act;
}

inline DenseMatrix encode_batch(const AutoencoderModel& m, const DenseMatrix& x) {
    if (x.n_cols != m.input_dim()) throw ShapeError("encode: input width != model input");
    DenseMatrix a = x;
    for (std::size_t i = 0; i < m.depth(); ++i) {
        DenseMatrix next = mm_nt(a, m.enc_weights[i]);
        detail::add_bias(next, m.enc_biases[i]);
        detail::apply_activation(next, m.enc_activation);
        a = std::move(next);
    }
    return a;
}

inline DenseMatrix decode_batch(const AutoencoderModel& m, const DenseMatrix& z) {
    if (z.n_cols != m.latent_width()) throw ShapeError("decode: latent width != model bottleneck");
    const std::size_t L = m.depth();
    DenseMatrix a = z;
    for (std::size_t j = 0; j < L; ++j) {
        DenseMatrix next =
            m.tied ? mm_nn(a, m.enc_weights[L - 1 - j]) : mm_nt(a, m.dec_weights[j]);
        detail::add_bias(next, m.dec_biases[j]);
        detail::apply_activation(next, m.dec_activation);
        a = std::move(next);
    }
    return a;
}

inline std::vector<double> encode(const AutoencoderModel& m, std::span<const double> x) {
    if (x.size() != m.input_dim()) throw ShapeError("encode: vector length != model input");
    DenseMatrix row(1, x.size());
    std::copy(x.begin(), x.end(), row.data.begin());
    return encode_batch(m, row).data;
}

inline std::vector<double> decode(const AutoencoderModel& m, std::span<const double> z) {
    if (z.size() != m.latent_width()) throw ShapeError("decode: vector length != bottleneck");
    DenseMatrix row(1, z.size());
    std::copy(z.begin(), z.end(), row.data.begin());
    return decode_batch(m, row).data;
}

inline DenseMatrix reconstruct_batch(const AutoencoderModel& m, const DenseMatrix& x) {
    return decode_batch(m, encode_batch(m, x));
}

// Mean over batch rows of the squared Euclidean reconstruction error.
inline double reconstruction_loss(const AutoencoderModel& m, const DenseMatrix& batch) {
    if (batch.n_rows == 0) throw DomainError("reconstruction_loss: empty batch");
    const DenseMatrix recon = reconstruct_batch(m, batch);
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.data.size(); ++i) {
        const double d = batch.data[i] - recon.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(batch.n_rows);
}

struct Gradients {
    std::vector<DenseMatrix> enc_w;
    std::vector<std::vector<double>> enc_b;
    std::vector<DenseMatrix> dec_w;  // empty when tied
    std::vector<std::vector<double>> dec_b;
    double recon_loss = 0.0;
};

// Objective the gradients correspond to: mean squared reconstruction error
// plus weight_decay * sum of squared weights (biases undecayed; a tied
// weight matrix is one parameter block and counts once).
inline double batch_objective(const AutoencoderModel& m, const DenseMatrix& batch,
                              double weight_decay) {
    double obj = reconstruction_loss(m, batch);
    for (const auto& w : m.enc_weights)
        for (double v : w.data) obj += weight_decay * v * v;
    for (const auto& w : m.dec_weights)
        for (double v : w.data) obj += weight_decay * v * v;
    return obj;
}

inline Gradients compute_gradients(const AutoencoderModel& m, const DenseMatrix& batch,
                                   double weight_decay) {
    if (batch.n_rows == 0) throw DomainError("compute_gradients: empty batch");
    const std::size_t L = m.depth();
    const auto act = forward_all(m, batch);

    Gradients g;
    for (std::size_t i = 0; i < L; ++i) {
        g.enc_w.emplace_back(m.enc_weights[i].n_rows, m.enc_weights[i].n_cols);
        g.enc_b.emplace_back(m.enc_biases[i].size(), 0.0);
    }
    for (std::size_t j = 0; j < L; ++j) {
        if (!m.tied) g.dec_w.emplace_back(m.dec_weights[j].n_rows, m.dec_weights[j].n_cols);
        g.dec_b.emplace_back(m.dec_biases[j].size(), 0.0);
    }

    const double scale = 2.0 / static_cast<double>(batch.n_rows);
    DenseMatrix d_act(batch.n_rows, batch.n_cols);
    for (std::size_t i = 0; i < batch.data.size(); ++i) {
        const double diff = act.back().data[i] - batch.data[i];
        g.recon_loss += diff * diff;
        d_act.data[i] = scale * diff;
    }
    g.recon_loss /= static_cast<double>(batch.n_rows);

    // decoder layers, last to first
    for (std::size_t j = L; j-- > 0;) {
        const DenseMatrix& out = act[L + 1 + j];
        const DenseMatrix& in = act[L + j];
        DenseMatrix d_pre = std::move(d_act);
        for (std::size_t i = 0; i < d_pre.data.size(); ++i)
            d_pre.data[i] *= detail::act_deriv(out.data[i], m.dec_activation);
        auto& db = g.dec_b[j];
        for (std::size_t r = 0; r < d_pre.n_rows; ++r) axpy(1.0, d_pre.row(r), db.data(), db.size());
        if (m.tied) {
            mm_tn_acc(in, d_pre, g.enc_w[L - 1 - j]);
            d_act = mm_nt(d_pre, m.enc_weights[L - 1 - j]);
        } else {
            mm_tn_acc(d_pre, in, g.dec_w[j]);
            d_act = mm_nn(d_pre, m.dec_weights[j]);
        }
    }
    // encoder layers, bottleneck back to input
    for (std::size_t i = L; i-- > 0;) {
        const DenseMatrix& out = act[i + 1];
        const DenseMatrix& in = act[i];
        DenseMatrix d_pre = std::move(d_act);
        for (std::size_t k = 0; k < d_pre.data.size(); ++k)
            d_pre.data[k] *= detail::act_deriv(out.data[k], m.enc_activation);
        auto& db = g.enc_b[i];
        for (std::size_t r = 0; r < d_pre.n_rows; ++r) axpy(1.0, d_pre.row(r), db.data(), db.size());
        mm_tn_acc(d_pre, in, g.enc_w[i]);
        if (i > 0) d_act = mm_nn(d_pre, m.enc_weights[i]);
    }

    if (weight_decay > 0.0) {
        for (std::size_t i = 0; i < L; ++i)
            axpy(2.0 * weight_decay, m.enc_weights[i].data.data(), g.enc_w[i].data.data(),
                 g.enc_w[i].data.size());
        for (std::size_t j = 0; j < g.dec_w.size(); ++j)
            axpy(2.0 * weight_decay, m.dec_weights[j].data.data(), g.dec_w[j].data.data(),
                 g.dec_w[j].data.size());
    }
    return g;
}

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainTrace {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;  // 0 = initial parameters
    // (epoch, end-of-epoch parameters); every epoch up to 50, then every
    // 5th, plus the final epoch. Populated only when snapshots are requested.
    std::vector<std::pair<std::size_t, AutoencoderModel>> snapshots;
};

struct TrainResult {
    AutoencoderModel model;  // parameters at the best-validation epoch
    TrainTrace trace;
};

namespace detail {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::vector<double>& w, const std::vector<double>& g, AdamState& s,
                      const TrainConfig& cfg, double bc1, double bc2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * g[i];
        s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        w[i] -= cfg.learning_rate * (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + cfg.epsilon);
    }
}

inline bool snapshot_due(std::size_t epoch, std::size_t total) {
    return epoch <= 50 || epoch % 5 == 0 || epoch == total;
}

// Minibatch backprop on an existing model (used by train, stacked
// fine-tuning, and any warm start).
inline TrainTrace train_loop(AutoencoderModel& model, AutoencoderModel& best,
                             const DenseMatrix& x_train, const DenseMatrix& x_val,
                             const TrainConfig& cfg, bool collect_snapshots) {
    const std::size_t n = x_train.n_rows;
    std::vector<detail::AdamState> enc_w_state, enc_b_state, dec_w_state, dec_b_state;
    if (cfg.optimizer == Optimizer::adam) {
        for (const auto& w : model.enc_weights) enc_w_state.emplace_back(w.data.size());
        for (const auto& b : model.enc_biases) enc_b_state.emplace_back(b.size());
        for (const auto& w : model.dec_weights) dec_w_state.emplace_back(w.data.size());
        for (const auto& b : model.dec_biases) dec_b_state.emplace_back(b.size());
    }

    Rng shuffle_rng(derive_seed(cfg.seed, "train.shuffle"));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    TrainTrace trace;
    best = model;
    double best_metric = std::numeric_limits<double>::infinity();
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(perm);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::vector<std::size_t> rows(perm.begin() + start, perm.begin() + stop);
            const DenseMatrix batch = dense_rows(x_train, rows);
            const Gradients g = compute_gradients(model, batch, cfg.weight_decay);
            loss_sum += g.recon_loss * static_cast<double>(rows.size());

            if (cfg.optimizer == Optimizer::sgd) {
                const double lr = cfg.learning_rate;
                for (std::size_t i = 0; i < model.enc_weights.size(); ++i)
                    axpy(-lr, g.enc_w[i].data.data(), model.enc_weights[i].data.data(),
                         g.enc_w[i].data.size());
                for (std::size_t i = 0; i < model.enc_biases.size(); ++i)
                    axpy(-lr, g.enc_b[i].data(), model.enc_biases[i].data(), g.enc_b[i].size());
                for (std::size_t j = 0; j < model.dec_weights.size(); ++j)
                    axpy(-lr, g.dec_w[j].data.data(), model.dec_weights[j].data.data(),
                         g.dec_w[j].data.size());
                for (std::size_t j = 0; j < model.dec_biases.size(); ++j)
                    axpy(-lr, g.dec_b[j].data(), model.dec_biases[j].data(), g.dec_b[j].size());
            } else {
                ++step;
                const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
                for (std::size_t i = 0; i < model.enc_weights.size(); ++i)
                    adam_step(model.enc_weights[i].data, g.enc_w[i].data, enc_w_state[i], cfg, bc1, bc2);
                for (std::size_t i = 0; i < model.enc_biases.size(); ++i)
                    adam_step(model.enc_biases[i], g.enc_b[i], enc_b_state[i], cfg, bc1, bc2);
                for (std::size_t j = 0; j < model.dec_weights.size(); ++j)
                    adam_step(model.dec_weights[j].data, g.dec_w[j].data, dec_w_state[j], cfg, bc1, bc2);
                for (std::size_t j = 0; j < model.dec_biases.size(); ++j)
                    adam_step(model.dec_biases[j], g.dec_b[j], dec_b_state[j], cfg, bc1, bc2);
            }
            if (!model.all_finite()) throw DivergenceError(epoch, batch_index);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(n);
        if (x_val.n_rows > 0) stats.val_loss = reconstruction_loss(model, x_val);
        trace.epochs.push_back(stats);

        const double metric = x_val.n_rows > 0 ? stats.val_loss : stats.train_loss;
        if (metric < best_metric) {
            best_metric = metric;
            best = model;
            trace.best_epoch = epoch;
        }
        if (collect_snapshots && snapshot_due(epoch, cfg.epochs))
            trace.snapshots.emplace_back(epoch, model);
    }
    return trace;
}

}  // namespace detail

// Minibatch backprop of the reconstruction objective. Deterministic under
// (data, cfg, seed); raises DivergenceError instead of returning non-finite
// parameters. The returned model is the best-validation checkpoint (best
// training loss when x_val is empty).
inline TrainResult train(const DenseMatrix& x_train, const DenseMatrix& x_val,
                         const TrainConfig& cfg, bool collect_snapshots = false) {
    cfg.validate();
    if (x_train.n_rows == 0) throw DomainError("train: empty training matrix");
    if (x_val.n_rows > 0 && x_val.n_cols != x_train.n_cols)
        throw ShapeError("train: validation column count differs");

    TrainResult result;
    AutoencoderModel model = init_model(x_train.n_cols, cfg);
    result.trace = detail::train_loop(model, result.model, x_train, x_val, cfg, collect_snapshots);
    return result;
}

inline TrainResult train(const DenseMatrix& x_train, const TrainConfig& cfg,
                         bool collect_snapshots = false) {
    return train(x_train, DenseMatrix(0, x_train.n_cols), cfg, collect_snapshots);
}

struct RSquared {
    std::vector<double> per_variable;  // NaN marks an undefined variable
    std::size_t defined = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
};

// R^2_i = 1 - sum_j (x_ji - x'_ji)^2 / sum_j x_ji^2 per variable (column);
// zero-denominator variables are undefined and excluded from the mean.
inline RSquared r_squared(const DenseMatrix& x, const DenseMatrix& recon) {
    if (x.n_rows != recon.n_rows || x.n_cols != recon.n_cols)
        throw ShapeError("r_squared: shape mismatch");
    RSquared r;
    r.per_variable.assign(x.n_cols, std::numeric_limits<double>::quiet_NaN());
    double mean_sum = 0.0;
    for (std::size_t j = 0; j < x.n_cols; ++j) {
        double den = 0.0, num = 0.0;
        for (std::size_t i = 0; i < x.n_rows; ++i) {
            const double v = x(i, j);
            const double d = v - recon(i, j);
            den += v * v;
            num += d * d;
        }
        if (den > 0.0) {
            r.per_variable[j] = 1.0 - num / den;
            mean_sum += r.per_variable[j];
            ++r.defined;
        }
    }
    if (r.defined > 0) r.mean = mean_sum / static_cast<double>(r.defined);
    return r;
}

// Greedy layer-wise stacking: stage k autoencodes stage k-1's latent codes;
// stages compose into one deep model, optionally fine-tuned end to end.
inline AutoencoderModel train_stacked(const DenseMatrix& x_train, const DenseMatrix& x_val,
                                      const std::vector<TrainConfig>& stage_cfgs,
                                      std::size_t fine_tune_epochs = 0) {
    if (stage_cfgs.empty()) throw ConfigError("train_stacked: no stages");
    for (std::size_t k = 1; k < stage_cfgs.size(); ++k)
        if (stage_cfgs[k].latent_dim >= stage_cfgs[k - 1].latent_dim)
            throw ConfigError("train_stacked: bottleneck widths must strictly decrease");
    for (const auto& cfg : stage_cfgs) {
        if (cfg.tied != stage_cfgs[0].tied || cfg.activation != stage_cfgs[0].activation ||
            cfg.decoder_activation != stage_cfgs[0].decoder_activation)
            throw ConfigError("train_stacked: stages must share tying and activations");
    }

    DenseMatrix cur_train = x_train;
    DenseMatrix cur_val = x_val;
    std::vector<AutoencoderModel> stages;
    for (const auto& cfg : stage_cfgs) {
        TrainResult r = train(cur_train, cur_val, cfg);
        cur_train = encode_batch(r.model, cur_train);
        if (cur_val.n_rows > 0) cur_val = encode_batch(r.model, cur_val);
        stages.push_back(std::move(r.model));
    }

    AutoencoderModel deep;
    deep.tied = stages[0].tied;
    deep.enc_activation = stages[0].enc_activation;
    deep.dec_activation = stages[0].dec_activation;
    std::vector<std::size_t> enc_widths{stages[0].input_dim()};
    for (auto& s : stages) {
        for (std::size_t i = 0; i < s.depth(); ++i) {
            deep.enc_weights.push_back(std::move(s.enc_weights[i]));
            deep.enc_biases.push_back(std::move(s.enc_biases[i]));
            enc_widths.push_back(deep.enc_weights.back().n_rows);
        }
    }
    for (std::size_t s = stages.size(); s-- > 0;) {
        for (std::size_t j = 0; j < stages[s].dec_biases.size(); ++j) {
            if (!deep.tied) deep.dec_weights.push_back(std::move(stages[s].dec_weights[j]));
            deep.dec_biases.push_back(std::move(stages[s].dec_biases[j]));
        }
    }
    deep.layer_widths = enc_widths;
    for (std::size_t i = enc_widths.size() - 1; i-- > 0;) deep.layer_widths.push_back(enc_widths[i]);

    if (fine_tune_epochs > 0) {
        TrainConfig ft = stage_cfgs.back();
        ft.epochs = fine_tune_epochs;
        ft.seed = derive_seed(ft.seed, "stacked.finetune");
        AutoencoderModel best;
        detail::train_loop(deep, best, x_train, x_val, ft, false);
        deep = std::move(best);
    }
    return deep;
}

// ---- serialization ----

inline void save_model(std::ostream& os, const AutoencoderModel& m) {
    os << "autoencoder v1\n";
    os << "widths " << m.layer_widths.size();
    for (std::size_t w : m.layer_widths) os << ' ' << w;
    os << '\n';
    os << "tied " << (m.tied ? 1 : 0) << '\n';
    os << "activation " << activation_name(m.enc_activation) << ' '
       << activation_name(m.dec_activation) << '\n';
    const std::size_t L = m.depth();
    for (std::size_t i = 0; i < L; ++i) {
        os << "enc_w " << i << ' ' << m.enc_weights[i].n_rows << ' ' << m.enc_weights[i].n_cols
           << '\n';
        for (std::size_t r = 0; r < m.enc_weights[i].n_rows; ++r) {
            for (std::size_t c = 0; c < m.enc_weights[i].n_cols; ++c)
                os << (c ? " " : "") << fmt_double(m.enc_weights[i](r, c));
            os << '\n';
        }
        os << "enc_b " << i << ' ' << m.enc_biases[i].size() << '\n';
        write_doubles(os, m.enc_biases[i]);
    }
    for (std::size_t j = 0; j < L; ++j) {
        if (!m.tied) {
            os << "dec_w " << j << ' ' << m.dec_weights[j].n_rows << ' ' << m.dec_weights[j].n_cols
               << '\n';
            for (std::size_t r = 0; r < m.dec_weights[j].n_rows; ++r) {
                for (std::size_t c = 0; c < m.dec_weights[j].n_cols; ++c)
                    os << (c ? " " : "") << fmt_double(m.dec_weights[j](r, c));
                os << '\n';
            }
        }
        os << "dec_b " << j << ' ' << m.dec_biases[j].size() << '\n';
        write_doubles(os, m.dec_biases[j]);
    }
}

inline AutoencoderModel load_model(std::istream& is) {
    expect_token(is, "autoencoder");
    expect_token(is, "v1");
    AutoencoderModel m;
    expect_token(is, "widths");
    const auto nw = read_value<std::size_t>(is, "width count");
    m.layer_widths.resize(nw);
    for (auto& w : m.layer_widths) w = read_value<std::size_t>(is, "width");
    expect_token(is, "tied");
    m.tied = read_value<int>(is, "tied flag") != 0;
    expect_token(is, "activation");
    m.enc_activation = activation_from_name(read_value<std::string>(is, "activation"));
    m.dec_activation = activation_from_name(read_value<std::string>(is, "activation"));
    const std::size_t L = (nw - 1) / 2;
    const auto read_matrix = [&](const char* tag, std::size_t idx) {
        expect_token(is, tag);
        if (read_value<std::size_t>(is, "index") != idx) throw IoError("model: layer out of order");
        const auto r = read_value<std::size_t>(is, "rows");
        const auto c = read_value<std::size_t>(is, "cols");
        DenseMatrix w(r, c);
        for (auto& v : w.data) v = read_value<double>(is, "weight");
        return w;
    };
    const auto read_bias = [&](const char* tag, std::size_t idx) {
        expect_token(is, tag);
        if (read_value<std::size_t>(is, "index") != idx) throw IoError("model: bias out of order");
        const auto len = read_value<std::size_t>(is, "length");
        return read_doubles(is, len);
    };
    for (std::size_t i = 0; i < L; ++i) {
        m.enc_weights.push_back(read_matrix("enc_w", i));
        m.enc_biases.push_back(read_bias("enc_b", i));
    }
    for (std::size_t j = 0; j < L; ++j) {
        if (!m.tied) m.dec_weights.push_back(read_matrix("dec_w", j));
        m.dec_biases.push_back(read_bias("dec_b", j));
    }
    return m;
}

inline void save_trace_csv(std::ostream& os, const TrainTrace& t) {
    os << "epoch,train_loss,val_loss\n";
    for (const auto& e : t.epochs)
        os << e.epoch << ',' << fmt_double(e.train_loss) << ','
           << (std::isnan(e.val_loss) ? std::string() : fmt_double(e.val_loss)) << '\n';
}

}  // namespace textae
