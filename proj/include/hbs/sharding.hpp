#pragma once

#include "hbs/core_model.hpp"
#include "hbs/digest.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hbs {

// Tree address. bits[i] is the turn taken at depth i+1 (0 = left, 1 = right).
struct ShardCoord {
    int level = 0;
    std::vector<std::uint8_t> bits;

    std::uint64_t index() const {
        if (level > 64) throw Error("E_DOMAIN", "shard index does not fit 64 bits");
        std::uint64_t s = 0;
        for (auto b : bits) s = 2 * s + b;
        return s;
    }

    // (s_0 = 0, s_1, ..., s_level)
    std::vector<std::uint64_t> branch() const {
        if (level > 64) throw Error("E_DOMAIN", "branch does not fit 64 bits");
        std::vector<std::uint64_t> br{0};
        std::uint64_t s = 0;
        for (auto b : bits) {
            s = 2 * s + b;
            br.push_back(s);
        }
        return br;
    }

    ShardCoord prefix(int l) const {
        ShardCoord c;
        c.level = l;
        c.bits.assign(bits.begin(), bits.begin() + l);
        return c;
    }

    static ShardCoord at(int level, std::uint64_t index) {
        ShardCoord c;
        c.level = level;
        c.bits.resize(static_cast<std::size_t>(level));
        for (int i = level - 1; i >= 0; --i, index >>= 1) c.bits[static_cast<std::size_t>(i)] = index & 1u;
        return c;
    }

    friend bool operator==(const ShardCoord&, const ShardCoord&) = default;
    friend auto operator<=>(const ShardCoord& a, const ShardCoord& b) {
        if (auto c = a.level <=> b.level; c != 0) return c;
        return a.bits <=> b.bits;
    }
};

inline std::string to_string(const ShardCoord& c) {
    return "(" + std::to_string(c.level) + "," + (c.level <= 64 ? std::to_string(c.index()) : std::string("?")) + ")";
}

struct GlobalNonce {
    Digest value{};
    std::map<std::pair<int, std::uint64_t>, Digest> intermediates;
};

inline Digest shard_digest(const std::uint8_t* id, std::size_t len, const std::optional<Digest>& nonce) {
    if (!nonce) return sha256(id, len);
    std::vector<std::uint8_t> buf(id, id + len);
    buf.insert(buf.end(), nonce->begin(), nonce->end());
    return sha256(buf);
}

inline ShardCoord coord_from_digest(int level, const Digest& d) {
    if (level < 0) throw Error("E_DOMAIN", "level must be >= 0");
    if (level >= 256) throw Error("E_DOMAIN", "level >= 256 exhausts the 256-bit digest");
    ShardCoord c;
    c.level = level;
    c.bits.resize(static_cast<std::size_t>(level));
    for (int i = 0; i < level; ++i) c.bits[static_cast<std::size_t>(i)] = digest_bit(d, i) ? 1 : 0;
    return c;
}

inline ShardCoord shard_path(int level, const std::vector<std::uint8_t>& identifier,
                             const std::optional<Digest>& nonce = std::nullopt) {
    if (level >= 256) throw Error("E_DOMAIN", "level >= 256 exhausts the 256-bit digest");
    return coord_from_digest(level, shard_digest(identifier.data(), identifier.size(), nonce));
}

inline ShardCoord shard_path(int level, std::string_view identifier, const std::optional<Digest>& nonce = std::nullopt) {
    return shard_path(level, std::vector<std::uint8_t>(identifier.begin(), identifier.end()), nonce);
}

inline ShardCoord tx_shard(int level, const ExtendedTransaction& tx, const std::optional<Digest>& nonce = std::nullopt) {
    if (level > 0 && !tx.extra_inputs.empty())
        throw Error("E_MULTI_INPUT_SHARDED", "multi-input transaction " + to_hex(tx.id) + " cannot be placed at level " +
                                                 std::to_string(level));
    if (level >= 256) throw Error("E_DOMAIN", "level >= 256 exhausts the 256-bit digest");
    return coord_from_digest(level, shard_digest(tx.input_ref.data(), tx.input_ref.size(), nonce));
}

using LocalRandomness = std::map<std::pair<int, std::uint64_t>, Digest>;

// Leaves: R = H(local). Inner nodes: R = H(local || R_left || R_right).
inline GlobalNonce fold_global_nonce(const LocalRandomness& local, int L) {
    if (L < 1 || L > 63) throw Error("E_DOMAIN", "L must be in [1, 63]");
    GlobalNonce g;
    auto get = [&](int l, std::uint64_t s) -> const Digest& {
        auto it = local.find({l, s});
        if (it == local.end())
            throw Error("E_MISSING_CHILD", "no local value for shard (" + std::to_string(l) + "," + std::to_string(s) + ")");
        return it->second;
    };
    for (int l = L - 1; l >= 0; --l) {
        for (std::uint64_t s = 0; s < (std::uint64_t{1} << l); ++s) {
            const Digest& r = get(l, s);
            if (l == L - 1) {
                g.intermediates[{l, s}] = sha256(r.data(), r.size());
            } else {
                const Digest& a = g.intermediates.at({l + 1, 2 * s});
                const Digest& b = g.intermediates.at({l + 1, 2 * s + 1});
                g.intermediates[{l, s}] = sha256_concat({&r, &a, &b});
            }
        }
    }
    g.value = g.intermediates.at({0, 0});
    return g;
}

inline double mfn_fraction(int level) { return std::ldexp(1.0, -level); }

// r(N,L) = N L^2/(2^L-1)^2 + L/(2^L-1)
inline double mfn_ratio(double N, double L) {
    const double m = std::exp2(L) - 1.0;
    return N * L * L / (m * m) + L / m;
}

inline double tree_throughput(double L, double target_time = kTargetTime) { return (std::exp2(L) - 1.0) / target_time; }

inline double mfn_store_rate(double n, double L) { return n * L / (std::exp2(L) - 1.0); }

inline double mfn_download_rate(double n, double L) { return n * L * L / (std::exp2(L) - 1.0) + L; }

inline double per_day_mb(double tx_per_s, double tx_bytes = 250.0) {
    return tx_per_s * 86400.0 * tx_bytes / (1024.0 * 1024.0);
}

struct OptimalLevels {
    double L_star = 0;
    int L_int = 0;  // best integer neighbour of L_star
    double storage_mb_day = 0;
    double download_mb_day = 0;
};

inline OptimalLevels optimal_levels(double n, double tx_bytes = 250.0) {
    if (!(n > 0)) throw Error("E_DOMAIN", "transaction rate must be positive");
    auto f = [n](double L) { return mfn_download_rate(n, L); };
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1.0, b = 64.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-7) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    OptimalLevels o;
    o.L_star = (a + b) / 2;
    const int lo = std::max(1, static_cast<int>(std::floor(o.L_star)));
    o.L_int = f(lo) <= f(lo + 1) ? lo : lo + 1;
    o.storage_mb_day = per_day_mb(mfn_store_rate(n, o.L_star), tx_bytes);
    o.download_mb_day = per_day_mb(mfn_download_rate(n, o.L_star), tx_bytes);
    return o;
}

// p(n) = (1 - 2^-l)^n
inline double routing_miss_probability(long long n_peers, int level) {
    if (n_peers < 0) throw Error("E_DOMAIN", "peer count must be >= 0");
    if (n_peers == 0) return 1.0;
    return std::exp(static_cast<double>(n_peers) * std::log1p(-std::ldexp(1.0, -level)));
}

// Smallest n with p(n) <= target_p.
inline long long required_peers(double target_p, int level) {
    if (!(target_p > 0 && target_p < 1)) throw Error("E_DOMAIN", "target probability must be in (0,1)");
    if (level == 0) return 1;
    long long n = static_cast<long long>(std::ceil(std::log(target_p) / std::log1p(-std::ldexp(1.0, -level))));
    while (n > 1 && routing_miss_probability(n - 1, level) <= target_p) --n;
    while (routing_miss_probability(n, level) > target_p) ++n;
    return n;
}

}  // namespace hbs
