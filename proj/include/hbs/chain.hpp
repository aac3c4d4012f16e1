#pragma once

#include "hbs/core_model.hpp"
#include "hbs/economics.hpp"
#include "hbs/sharding.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace hbs {

struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept {
        std::size_t h;
        std::memcpy(&h, d.data(), sizeof h);
        return h;
    }
};

// Header fields used by the distributed c_eta computation. Level-indexed
// vectors hold subtree sums for levels >= the block's own level.
struct Carried {
    bool enabled = false;
    int i = 0;             // position inside the retarget window
    double v = 0;          // online mean of beta_bar(B) * b(B)
    double s = 0;          // v + children's s
    double wb = 0;         // online mean of sum of beta in the block
    double wc = 0;         // online mean of tx count
    double wbits = 0;      // online mean of block bits
    std::vector<double> sub_beta, sub_count, sub_bits;
    Digest R{};
    std::optional<double> c_eta;
};

struct SubBlock {
    ShardCoord coord;
    long long seq = 0;
    Digest parent_ref{};
    std::vector<Digest> child_refs;
    std::vector<ExtendedTransaction> txs;
    double started_at = 0;
    double mined_at = 0;
    double visible_at = 0;
    std::int64_t size_bits = 8 * kHeaderBytes;
    Carried carried;
    Digest digest{};
};

inline std::int64_t block_bits(const std::vector<ExtendedTransaction>& txs) {
    std::int64_t b = 8 * kHeaderBytes;
    for (const auto& t : txs) b += t.bits();
    return b;
}

inline double block_beta_sum(const std::vector<ExtendedTransaction>& txs) {
    double s = 0;
    for (const auto& t : txs) s += value_per_bit(t);
    return s;
}

// beta_bar(B) * b(B), zero for an empty block
inline double carried_sample(const std::vector<ExtendedTransaction>& txs, std::int64_t size_bits) {
    if (txs.empty()) return 0.0;
    return block_beta_sum(txs) / static_cast<double>(txs.size()) * static_cast<double>(size_bits);
}

inline Digest compute_block_digest(const SubBlock& b) {
    std::vector<std::uint8_t> buf;
    auto put64 = [&](std::uint64_t x) {
        for (int k = 0; k < 8; ++k) buf.push_back(static_cast<std::uint8_t>(x >> (56 - 8 * k)));
    };
    auto putd = [&](double x) {
        std::uint64_t u;
        std::memcpy(&u, &x, sizeof u);
        put64(u);
    };
    put64(static_cast<std::uint64_t>(b.coord.level));
    for (auto bit : b.coord.bits) buf.push_back(bit);
    put64(static_cast<std::uint64_t>(b.seq));
    buf.insert(buf.end(), b.parent_ref.begin(), b.parent_ref.end());
    for (const auto& c : b.child_refs) buf.insert(buf.end(), c.begin(), c.end());
    for (const auto& t : b.txs) buf.insert(buf.end(), t.id.begin(), t.id.end());
    putd(b.mined_at);
    put64(static_cast<std::uint64_t>(b.size_bits));
    if (b.carried.enabled) {
        putd(b.carried.v);
        putd(b.carried.s);
        buf.insert(buf.end(), b.carried.R.begin(), b.carried.R.end());
    }
    return sha256(buf);
}

using UtxoSet = std::unordered_map<Digest, std::int64_t, DigestHash>;

struct ChainState {
    UtxoSet utxo;
    bool sharded = false;
    std::optional<Digest> nonce;
    int L = 1;
    // Previous carried header of each (level, shard) chain, for recomputing averages.
    std::map<std::pair<int, std::uint64_t>, Carried> prev_carried;
};

struct Verdict {
    bool ok = true;
    std::string code;
    std::string detail;
    std::optional<std::size_t> tx_index;

    static Verdict accept() { return {}; }
    static Verdict reject(std::string code, std::string detail, std::optional<std::size_t> idx = std::nullopt) {
        return {false, std::move(code), std::move(detail), idx};
    }
};

// Recomputes the carried header fields for block b given its children's headers.
inline Carried expected_carried(const SubBlock& b, const Carried* prev, const std::vector<const Carried*>& children,
                                int L) {
    Carried c;
    c.enabled = true;
    c.i = b.carried.i;
    const double p_v = prev ? prev->v : 0.0, p_wb = prev ? prev->wb : 0.0, p_wc = prev ? prev->wc : 0.0,
                 p_bits = prev ? prev->wbits : 0.0;
    c.v = recurrent_average(p_v, c.i, carried_sample(b.txs, b.size_bits));
    c.wb = recurrent_average(p_wb, c.i, block_beta_sum(b.txs));
    c.wc = recurrent_average(p_wc, c.i, static_cast<double>(b.txs.size()));
    c.wbits = recurrent_average(p_bits, c.i, static_cast<double>(b.size_bits));
    c.s = c.v;
    const int l = b.coord.level;
    const std::size_t n = static_cast<std::size_t>(L - l);
    c.sub_beta.assign(n, 0.0);
    c.sub_count.assign(n, 0.0);
    c.sub_bits.assign(n, 0.0);
    c.sub_beta[0] = c.wb;
    c.sub_count[0] = c.wc;
    c.sub_bits[0] = c.wbits;
    for (const Carried* ch : children) {
        if (!ch) continue;
        c.s = c.s + ch->s;
        for (std::size_t k = 1; k < n && k - 1 < ch->sub_beta.size(); ++k) {
            c.sub_beta[k] += ch->sub_beta[k - 1];
            c.sub_count[k] += ch->sub_count[k - 1];
            c.sub_bits[k] += ch->sub_bits[k - 1];
        }
    }
    c.R = b.carried.R;
    c.c_eta = b.carried.c_eta;
    return c;
}

// Accepts iff every input exists unspent, each tx maps to this shard, multi-input
// txs stay at level 0, and carried averages recompute.
inline Verdict validate_block(const SubBlock& b, const ChainState& st,
                              const std::vector<const Carried*>& children = {}) {
    std::unordered_set<Digest, DigestHash> used;
    for (std::size_t k = 0; k < b.txs.size(); ++k) {
        const auto& tx = b.txs[k];
        if (!tx.extra_inputs.empty() && b.coord.level > 0)
            return Verdict::reject("E_MULTI_INPUT_SHARDED", "tx " + to_hex(tx.id) + " has several inputs", k);
        if (st.sharded) {
            const ShardCoord want = tx_shard(b.coord.level, tx, st.nonce);
            if (!(want == b.coord))
                return Verdict::reject("E_SHARD_MISMATCH",
                                       "tx " + to_hex(tx.id) + " belongs to " + to_string(want) + " not " +
                                           to_string(b.coord),
                                       k);
        }
        auto check_input = [&](const Digest& in) -> bool { return st.utxo.count(in) && used.insert(in).second; };
        if (!check_input(tx.input_ref))
            return Verdict::reject("E_DOUBLE_SPEND", "tx " + to_hex(tx.id) + " spends missing or used output", k);
        for (const auto& in : tx.extra_inputs)
            if (!check_input(in))
                return Verdict::reject("E_DOUBLE_SPEND", "tx " + to_hex(tx.id) + " spends missing or used output", k);
    }
    if (b.carried.enabled) {
        auto it = st.prev_carried.find({b.coord.level, b.coord.level <= 64 ? b.coord.index() : 0});
        const Carried* prev = it == st.prev_carried.end() ? nullptr : &it->second;
        const Carried want = expected_carried(b, prev, children, st.L);
        if (want.v != b.carried.v) return Verdict::reject("E_BAD_CARRIED_AVERAGE", "field v does not recompute");
        if (want.s != b.carried.s) return Verdict::reject("E_BAD_CARRIED_AVERAGE", "field s does not recompute");
        if (want.sub_beta != b.carried.sub_beta || want.sub_count != b.carried.sub_count ||
            want.sub_bits != b.carried.sub_bits)
            return Verdict::reject("E_BAD_CARRIED_AVERAGE", "per-level subtree sums do not recompute");
    }
    return Verdict::accept();
}

struct PropagationModel {
    double ms_per_byte = 1.0;
    double floor_s = 0.0;
};

inline double propagation_delay(std::int64_t size_bytes, const PropagationModel& m) {
    if (size_bytes < 0) throw Error("E_DOMAIN", "size must be >= 0");
    return m.floor_s + m.ms_per_byte * static_cast<double>(size_bytes) / 1000.0;
}

// Exponential waiting time with mean eta * bits / fraction; fraction is actual
// over nominal hashrate of the shard. Zero fraction means nobody mines it.
template <class Rng>
double sample_mining_time(Rng& rng, double eta, double block_bits, double assigned_fraction) {
    if (!(assigned_fraction > 0)) return std::numeric_limits<double>::infinity();
    const double mean = eta * block_bits / assigned_fraction;
    if (!(mean > 0)) return 0.0;
    return std::exponential_distribution<double>(1.0 / mean)(rng);
}

struct TipCandidate {
    double work = 0;     // accumulated expected work
    double arrival = 0;  // when this node first saw the tip
    Digest digest{};
};

// Heaviest work, then earliest arrival, then lowest digest.
inline bool prefer_tip(const TipCandidate& a, const TipCandidate& b) {
    if (a.work != b.work) return a.work > b.work;
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.digest < b.digest;
}

inline int leading_zero_bits(const Digest& d) {
    int n = 0;
    for (auto byte : d) {
        if (byte == 0) {
            n += 8;
            continue;
        }
        for (int k = 7; k >= 0 && !((byte >> k) & 1); --k) ++n;
        break;
    }
    return n;
}

// Toy grinding over H(header || nonce); returns the first nonce meeting the
// target or nullopt after max_tries. Demonstration only.
inline std::optional<std::uint64_t> grind_toy(const Digest& header, int zero_bits, std::uint64_t max_tries) {
    std::uint8_t buf[40];
    std::memcpy(buf, header.data(), 32);
    for (std::uint64_t n = 0; n < max_tries; ++n) {
        for (int k = 0; k < 8; ++k) buf[32 + k] = static_cast<std::uint8_t>(n >> (56 - 8 * k));
        if (leading_zero_bits(sha256(buf, sizeof buf)) >= zero_bits) return n;
    }
    return std::nullopt;
}

}  // namespace hbs
