#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "textae/autoencoder.hpp"
#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/textio.hpp"

namespace textae {

struct BinnedActivations {
    std::size_t layer_index = 0;
    std::size_t epoch = 0;
    std::size_t n_bins = 0;
    std::vector<std::vector<std::uint16_t>> bin_rows;  // per-sample tuple of unit bins
    std::vector<std::uint64_t> codes;  // per-sample symbol, first-occurrence numbering
    std::size_t clamped = 0;           // values outside [lo, hi], clamped with this counter
};

// Equal-width bins over [lo, hi]; a value exactly at hi lands in the top
// bin, values outside the range clamp to the boundary bins and are counted.
inline BinnedActivations bin_activations(const DenseMatrix& acts, std::size_t n_bins, double lo,
                                         double hi) {
    if (n_bins < 2) throw ConfigError("bin_activations: need at least 2 bins");
    if (!(hi > lo)) throw ConfigError("bin_activations: range must have hi > lo");
    BinnedActivations out;
    out.n_bins = n_bins;
    out.bin_rows.reserve(acts.n_rows);
    const double width = (hi - lo) / static_cast<double>(n_bins);
    std::map<std::vector<std::uint16_t>, std::uint64_t> seen;
    for (std::size_t i = 0; i < acts.n_rows; ++i) {
        std::vector<std::uint16_t> row(acts.n_cols);
        for (std::size_t j = 0; j < acts.n_cols; ++j) {
            const double v = acts(i, j);
            std::int64_t b;
            if (v < lo) {
                b = 0;
                ++out.clamped;
            } else if (v > hi) {
                b = static_cast<std::int64_t>(n_bins) - 1;
                ++out.clamped;
            } else {
                b = static_cast<std::int64_t>((v - lo) / width);
                if (b >= static_cast<std::int64_t>(n_bins)) b = static_cast<std::int64_t>(n_bins) - 1;
            }
            row[j] = static_cast<std::uint16_t>(b);
        }
        const auto [it, inserted] = seen.emplace(row, seen.size());
        out.codes.push_back(it->second);
        out.bin_rows.push_back(std::move(row));
    }
    return out;
}

// Shannon entropy of the empirical symbol distribution, in bits.
inline double entropy_bits(const std::vector<std::uint64_t>& a) {
    if (a.empty()) throw DomainError("entropy_bits: empty symbol list");
    std::map<std::uint64_t, std::size_t> counts;
    for (std::uint64_t s : a) ++counts[s];
    const double n = static_cast<double>(a.size());
    double h = 0.0;
    for (const auto& [sym, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

// Plug-in mutual information of two aligned symbol lists, in bits.
// Accumulation order is fixed by the sorted joint table, so the result is
// reproducible bitwise.
inline double mutual_information(const std::vector<std::uint64_t>& a,
                                 const std::vector<std::uint64_t>& b) {
    if (a.size() != b.size()) throw ShapeError("mutual_information: length mismatch");
    if (a.empty()) throw DomainError("mutual_information: empty symbol lists");
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> joint;
    std::map<std::uint64_t, std::size_t> ma, mb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[{a[i], b[i]}];
        ++ma[a[i]];
        ++mb[b[i]];
    }
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        const double p_ab = static_cast<double>(c) / n;
        const double p_a = static_cast<double>(ma.at(key.first)) / n;
        const double p_b = static_cast<double>(mb.at(key.second)) / n;
        mi += p_ab * std::log2(p_ab / (p_a * p_b));
    }
    return std::max(0.0, mi);
}

struct InfoPlanePoint {
    std::size_t epoch = 0;
    std::size_t layer_index = 0;  // 1-based over the 2L-1 hidden layers
    double i_xt = 0.0;            // bits
    double i_tx = 0.0;            // bits
};

namespace detail {

// Sigmoid layers bin over [0,1]; linear layers over their own value range.
inline std::pair<double, double> bin_range(const DenseMatrix& acts, Activation act) {
    if (act == Activation::sigmoid) return {0.0, 1.0};
    double lo = acts.data.empty() ? 0.0 : acts.data[0];
    double hi = lo;
    for (double v : acts.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) hi = lo + 1.0;
    return {lo, hi};
}

}  // namespace detail

// Per-snapshot, per-hidden-layer information coordinates. Inputs are
// treated as unique (one symbol per sample) and the reconstruction is
// discretized with the same binning as the layers, so both MI terms reduce
// to exact plug-in estimates over finite alphabets. Hidden layers are the
// L encoder outputs followed by the decoder outputs short of the
// reconstruction: 2L-1 in total, indexed from 1.
inline std::vector<InfoPlanePoint> trace_information_plane(
    const std::vector<std::pair<std::size_t, AutoencoderModel>>& snapshots, const DenseMatrix& x,
    std::size_t n_bins = 30) {
    if (x.n_rows == 0) throw DomainError("trace_information_plane: empty data");
    if (snapshots.empty()) return {};
    for (const auto& [epoch, m] : snapshots)
        if (m.layer_widths != snapshots.front().second.layer_widths ||
            m.enc_activation != snapshots.front().second.enc_activation ||
            m.dec_activation != snapshots.front().second.dec_activation)
            throw ConfigError("trace_information_plane: snapshots differ in architecture");

    std::vector<std::uint64_t> x_ids(x.n_rows);
    for (std::size_t i = 0; i < x.n_rows; ++i) x_ids[i] = i;

    std::vector<InfoPlanePoint> points;
    for (const auto& [epoch, model] : snapshots) {
        const std::size_t L = model.depth();
        const auto acts = forward_all(model, x);
        const auto [rlo, rhi] = detail::bin_range(acts[2 * L], model.dec_activation);
        const auto recon = bin_activations(acts[2 * L], n_bins, rlo, rhi);
        for (std::size_t layer = 1; layer <= 2 * L - 1; ++layer) {
            const Activation act = layer <= L ? model.enc_activation : model.dec_activation;
            const auto [lo, hi] = detail::bin_range(acts[layer], act);
            auto binned = bin_activations(acts[layer], n_bins, lo, hi);
            binned.layer_index = layer;
            binned.epoch = epoch;
            InfoPlanePoint p;
            p.epoch = epoch;
            p.layer_index = layer;
            p.i_xt = mutual_information(x_ids, binned.codes);
            p.i_tx = mutual_information(binned.codes, recon.codes);
            points.push_back(p);
        }
    }
    return points;
}

inline void save_infoplane_csv(std::ostream& os, const std::vector<InfoPlanePoint>& points) {
    os << "epoch,layer,i_xt_bits,i_tx_bits\n";
    for (const auto& p : points)
        os << p.epoch << ',' << p.layer_index << ',' << fmt_double(p.i_xt) << ','
           << fmt_double(p.i_tx) << '\n';
}

}  // namespace textae
