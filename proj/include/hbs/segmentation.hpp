#pragma once

#include "hbs/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace hbs {

enum class RangeMode { uniform, rounded };

inline const char* to_string(RangeMode m) { return m == RangeMode::uniform ? "uniform" : "rounded"; }

struct Segmentation {
    std::vector<std::vector<ExtendedTransaction>> levels;  // level 0 holds the highest beta
    std::vector<double> boundaries;                        // L+1 descending lg-beta cut points
    RangeMode mode = RangeMode::uniform;
    double step = 0;  // S_L

    int L() const { return static_cast<int>(levels.size()); }
};

namespace detail {

inline bool beta_order(const ExtendedTransaction& a, double ba, const ExtendedTransaction& b, double bb) {
    if (ba != bb) return ba > bb;
    return a.id < b.id;
}

}  // namespace detail

// Splits txs into L lists by lg(beta). Walks the sorted list once and moves
// the threshold C down by S_L until the current tx is at or above it; a tx
// sitting exactly on a cut point stays in the higher-beta level.
inline Segmentation segment(int L, const std::vector<ExtendedTransaction>& txs, RangeMode mode = RangeMode::uniform) {
    if (L < 1) throw Error("E_DOMAIN", "number of levels must be >= 1");
    if (txs.empty()) throw Error("E_EMPTY", "cannot segment an empty transaction set");
    for (const auto& t : txs)
        if (t.value < 1) throw Error("E_ZERO_VALUE", "transaction " + to_hex(t.id) + " has zero value");

    std::vector<std::pair<double, std::size_t>> order(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) order[i] = {value_per_bit(txs[i]), i};
    std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
        return detail::beta_order(txs[x.second], x.first, txs[y.second], y.first);
    });

    const double top = std::log10(order.front().first);
    const double bottom = std::log10(order.back().first);
    Segmentation seg;
    seg.mode = mode;
    seg.levels.resize(static_cast<std::size_t>(L));
    seg.step = mode == RangeMode::uniform ? (top - bottom) / L
                                          : (std::ceil(top) - std::floor(bottom)) / L;
    seg.boundaries.resize(static_cast<std::size_t>(L) + 1);
    for (int k = 0; k < L; ++k) seg.boundaries[static_cast<std::size_t>(k)] = top - k * seg.step;
    seg.boundaries[static_cast<std::size_t>(L)] =
        mode == RangeMode::uniform ? bottom : std::min(bottom, top - L * seg.step);

    int l = 0;
    double C = top - seg.step;
    for (const auto& [beta, idx] : order) {
        const double lg = std::log10(beta);
        while (lg < C && l < L - 1) {
            ++l;
            C = top - (l + 1) * seg.step;
        }
        seg.levels[static_cast<std::size_t>(l)].push_back(txs[idx]);
    }
    return seg;
}

// Level an arbitrary beta falls into given fixed cut points (same rule as segment()).
inline int level_for_beta(const std::vector<double>& boundaries, double beta) {
    const int L = static_cast<int>(boundaries.size()) - 1;
    const double lg = std::log10(beta);
    int l = 0;
    while (l < L - 1 && lg < boundaries[static_cast<std::size_t>(l) + 1]) ++l;
    return l;
}

struct LevelStat {
    std::size_t count = 0;
    double min_beta = std::numeric_limits<double>::quiet_NaN();
    double max_beta = std::numeric_limits<double>::quiet_NaN();
    double mean_beta = std::numeric_limits<double>::quiet_NaN();
    double min_value = std::numeric_limits<double>::quiet_NaN();
    double max_value = std::numeric_limits<double>::quiet_NaN();
    double mean_value = std::numeric_limits<double>::quiet_NaN();
    double total_value = 0;
    double mean_size_bytes = std::numeric_limits<double>::quiet_NaN();
    double total_bits = 0;

    bool present() const { return count > 0; }
};

struct LevelStats {
    std::vector<LevelStat> levels;
    int L() const { return static_cast<int>(levels.size()); }
};

inline LevelStat stat_of(const std::vector<ExtendedTransaction>& txs) {
    LevelStat s;
    if (txs.empty()) return s;
    s.count = txs.size();
    s.min_beta = s.min_value = std::numeric_limits<double>::infinity();
    s.max_beta = s.max_value = -std::numeric_limits<double>::infinity();
    double sum_beta = 0, sum_size = 0;
    for (const auto& t : txs) {
        const double b = value_per_bit(t), v = static_cast<double>(t.value);
        s.min_beta = std::min(s.min_beta, b);
        s.max_beta = std::max(s.max_beta, b);
        s.min_value = std::min(s.min_value, v);
        s.max_value = std::max(s.max_value, v);
        sum_beta += b;
        s.total_value += v;
        sum_size += static_cast<double>(t.size_bytes);
        s.total_bits += static_cast<double>(t.bits());
    }
    const double n = static_cast<double>(s.count);
    s.mean_beta = sum_beta / n;
    s.mean_value = s.total_value / n;
    s.mean_size_bytes = sum_size / n;
    return s;
}

inline LevelStats level_stats(const Segmentation& seg) {
    LevelStats out;
    for (const auto& lvl : seg.levels) out.levels.push_back(stat_of(lvl));
    return out;
}

struct LogNormalFit {
    double mu = 0;
    double sigma = 0;

    // Normal density of lg(beta).
    double pdf(double lg_beta) const {
        if (sigma == 0) return lg_beta == mu ? std::numeric_limits<double>::infinity() : 0.0;
        const double z = (lg_beta - mu) / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
    }
};

inline LogNormalFit fit_lognormal_lg(const std::vector<double>& lg) {
    if (lg.size() < 2) throw Error("E_DOMAIN", "log-normal fit needs at least 2 samples");
    const double n = static_cast<double>(lg.size());
    const double mu = std::accumulate(lg.begin(), lg.end(), 0.0) / n;
    double ss = 0;
    for (double x : lg) ss += (x - mu) * (x - mu);
    return {mu, std::sqrt(ss / (n - 1))};
}

inline std::vector<double> lg_betas(const std::vector<ExtendedTransaction>& txs) {
    std::vector<double> lg;
    lg.reserve(txs.size());
    for (const auto& t : txs) lg.push_back(std::log10(value_per_bit(t)));
    return lg;
}

inline LogNormalFit fit_lognormal(const std::vector<ExtendedTransaction>& txs) {
    if (txs.size() < 2) throw Error("E_DOMAIN", "log-normal fit needs at least 2 transactions");
    return fit_lognormal_lg(lg_betas(txs));
}

struct Histogram {
    std::vector<double> edges;    // bins+1
    std::vector<double> density;  // integrates to 1
};

inline Histogram density_histogram(const std::vector<double>& xs, int bins = 100) {
    if (xs.empty() || bins < 1) throw Error("E_DOMAIN", "histogram needs samples and bins >= 1");
    auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    double lo = *lo_it, hi = *hi_it;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    const double w = (hi - lo) / bins;
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + i * w;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double x : xs) {
        int b = static_cast<int>((x - lo) / w);
        b = std::clamp(b, 0, bins - 1);
        counts[static_cast<std::size_t>(b)] += 1;
    }
    h.density.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        h.density[i] = counts[i] / (static_cast<double>(xs.size()) * w);
    return h;
}

}  // namespace hbs
