#pragma once

#include "hbs/core_model.hpp"
#include "hbs/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

namespace hbs {

struct LevelSchedule {
    int L = 0;
    double c_eta = 0;
    std::vector<double> eta;
    std::vector<double> fee_rate_per_bit;
    std::vector<double> reward_share;
    std::vector<double> expected_block_time;
    std::vector<double> avg_block_bits;
    std::vector<double> boundaries;
};

struct EnergyParams {
    double efficiency = 30;          // J/TH
    double electricity_price = 0.1;  // $/kWh
    double btcusd = 40000;
    double fee_per_bit_usd = 0.001875;
    double block_reward = 6.25;  // BTC
};

struct EnergyCost {
    double kwh = 0;
    double usd = 0;
};

struct MinLevelCheck {
    bool ok = false;
    int recommended_L = 0;  // 0 when even level 0 is too fast
};

// c_eta = T * blocks * 1e8 / sum_l(mean_beta_l * bits_l); beta in sat/bit
inline double compute_c_eta_flat(const LevelStats& stats, long long num_blocks, double target_time = kTargetTime) {
    if (num_blocks < 1) throw Error("E_DOMAIN", "num_blocks must be >= 1");
    double denom = 0;
    for (const auto& s : stats.levels)
        if (s.present()) denom += s.mean_beta * s.total_bits;
    if (!(denom > 0)) throw Error("E_EMPTY", "all levels are empty");
    return target_time * static_cast<double>(num_blocks) * static_cast<double>(kSatPerBtc) / denom;
}

// Coarser estimator: T * blocks / total value (in BTC).
inline double compute_c_eta_total_value(double total_value_sat, long long num_blocks, double target_time = kTargetTime) {
    if (!(total_value_sat > 0)) throw Error("E_EMPTY", "total value must be positive");
    return target_time * static_cast<double>(num_blocks) * static_cast<double>(kSatPerBtc) / total_value_sat;
}

inline double compute_c_eta_total_value(const LevelStats& stats, long long num_blocks, double target_time = kTargetTime) {
    double v = 0;
    for (const auto& s : stats.levels) v += s.total_value;
    return compute_c_eta_total_value(v, num_blocks, target_time);
}

// eta_l = c_eta * mean_beta_l / 1e8. Empty levels keep prev[l] (0 if none given).
inline std::vector<double> eta_levels_flat(double c_eta, const LevelStats& stats,
                                           const std::vector<double>& prev = {}) {
    if (!(c_eta > 0)) throw Error("E_DOMAIN", "c_eta must be positive");
    std::vector<double> eta(stats.levels.size(), 0.0);
    for (std::size_t l = 0; l < eta.size(); ++l) {
        if (stats.levels[l].present())
            eta[l] = c_eta * stats.levels[l].mean_beta / static_cast<double>(kSatPerBtc);
        else if (l < prev.size())
            eta[l] = prev[l];
    }
    return eta;
}

inline std::vector<double> eta_levels_tree(double c_eta, const LevelStats& stats, int children_per_node = 2,
                                           const std::vector<double>& prev_tree = {}) {
    if (children_per_node < 2) throw Error("E_DOMAIN", "children_per_node must be >= 2");
    std::vector<double> prev_flat(prev_tree.size());
    for (std::size_t l = 0; l < prev_tree.size(); ++l)
        prev_flat[l] = prev_tree[l] / std::pow(children_per_node, static_cast<double>(l));
    auto eta = eta_levels_flat(c_eta, stats, prev_flat);
    for (std::size_t l = 0; l < eta.size(); ++l) eta[l] *= std::pow(children_per_node, static_cast<double>(l));
    return eta;
}

inline bool strictly_decreasing(const std::vector<double>& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] < xs[i - 1])) return false;
    return true;
}

inline std::vector<double> time_per_level(const std::vector<double>& eta, const std::vector<double>& avg_block_bits) {
    if (eta.size() != avg_block_bits.size()) throw Error("E_DOMAIN", "eta and block-size vectors differ in length");
    std::vector<double> t(eta.size());
    for (std::size_t l = 0; l < t.size(); ++l) t[l] = eta[l] * avg_block_bits[l];
    return t;
}

inline MinLevelCheck check_min_level_time(const std::vector<double>& times, double t_min = 15.0) {
    MinLevelCheck r;
    r.ok = !times.empty() && times.back() > t_min;
    for (std::size_t k = times.size(); k >= 1; --k)
        if (times[k - 1] > t_min) {
            r.recommended_L = static_cast<int>(k);
            break;
        }
    return r;
}

inline MinLevelCheck check_min_level_time(const LevelSchedule& s, double t_min = 15.0) {
    return check_min_level_time(s.expected_block_time, t_min);
}

inline std::vector<double> fee_rates(const std::vector<double>& eta, double kappa_fee) {
    if (!(kappa_fee > 0)) throw Error("E_DOMAIN", "kappa_fee must be positive");
    std::vector<double> f(eta.size());
    for (std::size_t l = 0; l < f.size(); ++l) f[l] = kappa_fee * eta[l];
    return f;
}

// Splits `total` units proportionally to weights; remainders go to the largest
// fractional parts, ties to the lower index.
inline std::vector<std::int64_t> largest_remainder(const std::vector<double>& weights, std::int64_t total) {
    double sum = 0;
    for (double w : weights) {
        if (w < 0 || !std::isfinite(w)) throw Error("E_DOMAIN", "weights must be finite and nonnegative");
        sum += w;
    }
    if (!(sum > 0)) throw Error("E_ZERO_TIMES", "all level times are zero");
    std::vector<std::int64_t> out(weights.size());
    std::vector<std::pair<double, std::size_t>> frac(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const long double exact = static_cast<long double>(weights[i]) / sum * static_cast<long double>(total);
        out[i] = static_cast<std::int64_t>(std::floor(exact));
        frac[i] = {static_cast<double>(exact - std::floor(exact)), i};
        assigned += out[i];
    }
    std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t k = 0; k < total - assigned; ++k) ++out[frac[static_cast<std::size_t>(k) % frac.size()].second];
    return out;
}

inline std::int64_t btc_to_sat(double btc) { return std::llround(btc * static_cast<double>(kSatPerBtc)); }

inline std::vector<std::int64_t> reward_split_flat_sat(const std::vector<double>& times, std::int64_t reward_sat) {
    return largest_remainder(times, reward_sat);
}

inline std::vector<double> reward_split_flat(const std::vector<double>& times, double block_reward) {
    auto sat = reward_split_flat_sat(times, btc_to_sat(block_reward));
    std::vector<double> r(sat.size());
    for (std::size_t l = 0; l < r.size(); ++l) r[l] = static_cast<double>(sat[l]) / static_cast<double>(kSatPerBtc);
    return r;
}

// r_{l,s} = t_l / (2^l * sum t) * r ; result[l] has 2^l entries.
inline std::vector<std::vector<double>> reward_split_tree(const std::vector<double>& times, int L, double block_reward) {
    if (static_cast<int>(times.size()) != L) throw Error("E_DOMAIN", "times must have L entries");
    const double sum = std::accumulate(times.begin(), times.end(), 0.0);
    if (!(sum > 0)) throw Error("E_ZERO_TIMES", "all level times are zero");
    std::vector<std::vector<double>> r(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l)
        r[static_cast<std::size_t>(l)].assign(std::size_t{1} << l,
                                              times[static_cast<std::size_t>(l)] / (std::ldexp(1.0, l) * sum) * block_reward);
    return r;
}

// Satoshi version: level totals by largest remainder, then each level total spread over its shards.
inline std::vector<std::vector<std::int64_t>> reward_split_tree_sat(const std::vector<double>& times, int L,
                                                                    std::int64_t reward_sat) {
    if (static_cast<int>(times.size()) != L) throw Error("E_DOMAIN", "times must have L entries");
    auto level_sat = largest_remainder(times, reward_sat);
    std::vector<std::vector<std::int64_t>> r(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        const std::int64_t shards = std::int64_t{1} << l, tot = level_sat[static_cast<std::size_t>(l)];
        auto& row = r[static_cast<std::size_t>(l)];
        row.assign(static_cast<std::size_t>(shards), tot / shards);
        for (std::int64_t s = 0; s < tot % shards; ++s) ++row[static_cast<std::size_t>(s)];
    }
    return r;
}

// Online mean: v_i = i/(i+1) v_{i-1} + x/(i+1)
inline double recurrent_average(double prev, long long i, double sample) {
    if (i < 0) throw Error("E_DOMAIN", "index must be >= 0");
    const double n = static_cast<double>(i) + 1.0;
    if (i == 0) return sample;
    return (static_cast<double>(i) / n) * prev + sample / n;
}

constexpr double kHeaderPropagationFloor = 0.08;  // s, 80-byte header at 1 ms/B

inline double homotopy_lambda(double t_n, double target = kTargetTime, double floor_s = kHeaderPropagationFloor) {
    if (t_n < 0) throw Error("E_DOMAIN", "t_n must be >= 0");
    if (t_n > target) throw Error("E_DOMAIN", "t_n exceeds target time");
    return std::max(t_n, floor_s) / target;
}

inline EnergyCost energy_per_tx(const EnergyParams& ep, const NetworkParams& net, std::int64_t size_bytes) {
    const double th_per_s = net.total_hashrate / 1e12;
    const double block_kwh = ep.efficiency * th_per_s * net.target_superblock_time / 3.6e6;
    EnergyCost c;
    c.kwh = block_kwh * static_cast<double>(size_bytes) / (1024.0 * 1024.0);
    c.usd = c.kwh * ep.electricity_price;
    return c;
}

// Largest energy per block a rational miner can burn: (r*BTCUSD + 8*2^20*phi) / p
inline double energy_upper_bound(const EnergyParams& ep) {
    if (!(ep.electricity_price > 0)) throw Error("E_DOMAIN", "electricity price must be positive");
    return (ep.block_reward * ep.btcusd + 8.0 * 1024.0 * 1024.0 * ep.fee_per_bit_usd) / ep.electricity_price;
}

inline double annualize_per_block(double per_block, double block_time = kTargetTime) {
    return per_block * (365.0 * 24.0 * 3600.0 / block_time);
}

inline std::vector<double> avg_block_bits(const LevelStats& stats, long long num_blocks) {
    std::vector<double> b(stats.levels.size());
    for (std::size_t l = 0; l < b.size(); ++l) b[l] = stats.levels[l].total_bits / static_cast<double>(num_blocks);
    return b;
}

// Full flat schedule from window statistics. kappa_fee <= 0 means fee = eta.
inline LevelSchedule build_schedule(const LevelStats& stats, long long num_blocks, double target_time = kTargetTime,
                                    double kappa_fee = 1.0, const LevelSchedule* prev = nullptr) {
    LevelSchedule s;
    s.L = stats.L();
    s.c_eta = compute_c_eta_flat(stats, num_blocks, target_time);
    s.eta = eta_levels_flat(s.c_eta, stats, prev ? prev->eta : std::vector<double>{});
    s.avg_block_bits = avg_block_bits(stats, num_blocks);
    s.expected_block_time = time_per_level(s.eta, s.avg_block_bits);
    s.fee_rate_per_bit = fee_rates(s.eta, kappa_fee > 0 ? kappa_fee : 1.0);
    const double tot = std::accumulate(s.expected_block_time.begin(), s.expected_block_time.end(), 0.0);
    s.reward_share.resize(s.expected_block_time.size());
    for (std::size_t l = 0; l < s.reward_share.size(); ++l) s.reward_share[l] = s.expected_block_time[l] / tot;
    if (prev) s.boundaries = prev->boundaries;
    return s;
}

}  // namespace hbs
