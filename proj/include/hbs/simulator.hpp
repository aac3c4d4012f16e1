#pragma once

#include "hbs/chain.hpp"
#include "hbs/economics.hpp"
#include "hbs/report.hpp"
#include "hbs/segmentation.hpp"
#include "hbs/sharding.hpp"
#include "hbs/sim_config.hpp"
#include "hbs/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace hbs {

struct PendingTx {
    ExtendedTransaction tx;
    std::int64_t fee = 0;
    double arrival = 0;
    int level = 0;
    std::optional<ShardCoord> forced;
    bool adversarial = false;
};

// Per-bucket priority queues ordered by fee per bit (desc), arrival, id.
class Mempool {
public:
    struct Key {
        double neg_rate = 0;
        double arrival = 0;
        Digest id{};
        auto operator<=>(const Key&) const = default;
    };

    Mempool(std::size_t buckets, std::size_t cap) : buckets_(buckets), cap_(cap) {}

    static Key key_of(const PendingTx& p) {
        return {-static_cast<double>(p.fee) / static_cast<double>(p.tx.bits()), p.arrival, p.tx.id};
    }

    // Inserts; returns the evicted lowest-priority entry when over capacity.
    std::optional<PendingTx> add(std::size_t bucket, PendingTx p) {
        auto& b = buckets_.at(bucket);
        b.emplace(key_of(p), std::move(p));
        if (b.size() <= cap_) return std::nullopt;
        auto last = std::prev(b.end());
        PendingTx out = std::move(last->second);
        b.erase(last);
        return out;
    }

    const std::map<Key, PendingTx>& bucket(std::size_t i) const { return buckets_.at(i); }
    std::map<Key, PendingTx>& bucket(std::size_t i) { return buckets_.at(i); }
    std::size_t size(std::size_t i) const { return buckets_.at(i).size(); }

    PendingTx take(std::size_t bucket, const Key& k) {
        auto& b = buckets_.at(bucket);
        auto it = b.find(k);
        PendingTx p = std::move(it->second);
        b.erase(it);
        return p;
    }

private:
    std::vector<std::map<Key, PendingTx>> buckets_;
    std::size_t cap_;
};

// Greedy fill: walk candidates in priority order, keep what fits.
inline std::vector<Mempool::Key> greedy_fill(const std::vector<std::pair<Mempool::Key, std::int64_t>>& candidates,
                                             std::int64_t capacity_bits) {
    std::vector<Mempool::Key> out;
    std::int64_t used = 0;
    for (const auto& [k, bits] : candidates)
        if (used + bits <= capacity_bits) {
            out.push_back(k);
            used += bits;
        }
    return out;
}

inline double c_eta_from_root_sum(double target_time, double s00) {
    return target_time * static_cast<double>(kSatPerBtc) / s00;
}

struct TreeReplay {
    std::vector<double> c_eta;   // carried-average recurrence replayed
    std::vector<double> batch;   // 1/n sum form
    std::vector<double> pooled;  // compute_c_eta_flat on pooled window data
};

// Recomputes the in-band c_eta of every completed window from raw per-shard records.
inline TreeReplay replay_tree_c_eta(const std::vector<TreeRawRecord>& raw, int L, int W, double target_time) {
    TreeReplay out;
    struct Latest {
        double v = 0, s = 0;
        bool seen = false;
    };
    std::map<std::pair<int, std::uint64_t>, Latest> latest;
    std::map<std::pair<int, std::uint64_t>, std::pair<double, int>> batch_acc;
    std::vector<double> lvl_beta(static_cast<std::size_t>(L)), lvl_count(static_cast<std::size_t>(L)),
        lvl_bits(static_cast<std::size_t>(L));
    int cur_window = -1;
    for (const auto& r : raw) {
        if (r.window != cur_window) {
            cur_window = r.window;
            batch_acc.clear();
            std::fill(lvl_beta.begin(), lvl_beta.end(), 0.0);
            std::fill(lvl_count.begin(), lvl_count.end(), 0.0);
            std::fill(lvl_bits.begin(), lvl_bits.end(), 0.0);
        }
        if (!r.mined) continue;
        const double sample = r.count > 0 ? r.beta_sum / r.count * r.bits : 0.0;
        auto& me = latest[{r.level, r.shard}];
        me.v = recurrent_average(me.v, r.i, sample);
        me.s = me.v;
        if (r.level < L - 1)
            for (std::uint64_t c : {2 * r.shard, 2 * r.shard + 1}) {
                auto it = latest.find({r.level + 1, c});
                if (it != latest.end() && it->second.seen) me.s = me.s + it->second.s;
            }
        me.seen = true;
        auto& acc = batch_acc[{r.level, r.shard}];
        acc.first += sample;
        acc.second += 1;
        lvl_beta[static_cast<std::size_t>(r.level)] += r.beta_sum;
        lvl_count[static_cast<std::size_t>(r.level)] += r.count;
        lvl_bits[static_cast<std::size_t>(r.level)] += r.bits;
        if (r.level == 0 && r.i == W - 1) {
            out.c_eta.push_back(c_eta_from_root_sum(target_time, me.s));
            double tot = 0;
            for (const auto& [k, a] : batch_acc) tot += a.first / a.second;
            out.batch.push_back(c_eta_from_root_sum(target_time, tot));
            LevelStats st;
            for (int l = 0; l < L; ++l) {
                LevelStat s;
                s.count = static_cast<std::size_t>(lvl_count[static_cast<std::size_t>(l)]);
                if (s.count > 0) s.mean_beta = lvl_beta[static_cast<std::size_t>(l)] / lvl_count[static_cast<std::size_t>(l)];
                s.total_bits = lvl_bits[static_cast<std::size_t>(l)];
                st.levels.push_back(s);
            }
            bool any = std::any_of(st.levels.begin(), st.levels.end(), [](const LevelStat& s) { return s.present(); });
            out.pooled.push_back(any ? compute_c_eta_flat(st, W, target_time) : 0.0);
        }
    }
    return out;
}

inline double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    const std::size_t m = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(m), xs.end());
    double hi = xs[m];
    if (xs.size() % 2) return hi;
    double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(m));
    return (lo + hi) / 2;
}

class Simulator {
public:
    explicit Simulator(SimConfig cfg)
        : cfg_(std::move(cfg)), rng_(cfg_.seed), L_(cfg_.L), mempool_(1, 1) {
        cfg_.validate();
        prop_.ms_per_byte = cfg_.propagation_ms_per_byte;
        prop_.floor_s = cfg_.propagation_floor_s;
        if (cfg_.miners.empty()) {
            for (int k = 0; k < cfg_.num_miners; ++k)
                miners_.push_back({"peer-" + std::to_string(cfg_.seed) + "-" + std::to_string(k),
                                   cfg_.total_hashrate / cfg_.num_miners});
        } else {
            miners_ = cfg_.miners;
        }
        h_B_ = 0;
        for (const auto& m : miners_) h_B_ += m.hashrate;
        const bool per_chain = cfg_.mode == Mode::concurrent;
        const std::size_t nb = per_chain ? (std::size_t{1} << L_) - 1 : static_cast<std::size_t>(L_);
        mempool_ = Mempool(nb, cfg_.mempool_cap_per_level);
        incl_lat_.resize(static_cast<std::size_t>(L_));
        root_lat_.resize(static_cast<std::size_t>(L_));
        mining_times_.resize(static_cast<std::size_t>(L_));
        draw_means_.resize(static_cast<std::size_t>(L_));
        level_blocks_.assign(static_cast<std::size_t>(L_), 0);
        level_txs_.assign(static_cast<std::size_t>(L_), 0);
        level_bits_sum_.assign(static_cast<std::size_t>(L_), 0.0);
        level_stalled_.assign(static_cast<std::size_t>(L_), 0);
        level_reward_.assign(static_cast<std::size_t>(L_), 0);
        reset_window();
    }

    SimReport run() {
        rep_.mode = nlohmann::json(cfg_.mode).get<std::string>();
        rep_.seed = cfg_.seed;
        rep_.L = L_;
        rep_.config = cfg_;
        bootstrap();
        genesis();
        next_arrival_ = next_arrival_gap(cfg_.workload, rng_);
        switch (cfg_.mode) {
        case Mode::flat: run_sequential(false); break;
        case Mode::hybrid: run_sequential(true); break;
        case Mode::tree: run_tree(); break;
        case Mode::concurrent: run_concurrent(); break;
        }
        finish();
        return std::move(rep_);
    }

private:
    // ---- setup -------------------------------------------------------------

    bool tree_like() const { return cfg_.mode == Mode::tree || cfg_.mode == Mode::concurrent; }

    void bootstrap() {
        std::vector<ExtendedTransaction> sample;
        std::vector<std::optional<int>> overrides;
        for (int k = 0; k < cfg_.bootstrap_txs; ++k) {
            TxDraw d = draw_tx(cfg_.workload, rng_);
            ExtendedTransaction t;
            t.id = counter_id(1, static_cast<std::uint64_t>(k));
            t.value = d.value;
            t.size_bytes = d.size_bytes;
            sample.push_back(t);
            overrides.push_back(draw_override(cfg_.workload, L_, rng_));
        }
        boundaries_ = segment(L_, sample).boundaries;
        rep_.boundaries = boundaries_;
        std::vector<std::vector<ExtendedTransaction>> lv(static_cast<std::size_t>(L_));
        for (std::size_t k = 0; k < sample.size(); ++k) {
            const int l = overrides[k] ? *overrides[k] : level_for_beta(boundaries_, value_per_bit(sample[k]));
            lv[static_cast<std::size_t>(l)].push_back(sample[k]);
        }
        const double per_sb = cfg_.workload.rate * cfg_.target_time;
        LevelStats st;
        for (int l = 0; l < L_; ++l) {
            LevelStat s = stat_of(lv[static_cast<std::size_t>(l)]);
            const double shards = tree_like() ? std::ldexp(1.0, l) : 1.0;
            double payload = 0;
            if (s.present())
                payload = per_sb * static_cast<double>(s.count) / static_cast<double>(sample.size()) *
                          s.mean_size_bytes * 8.0;
            payload = std::min(payload, shards * static_cast<double>(cfg_.max_block_bits - 8 * kHeaderBytes));
            s.total_bits = shards * 8.0 * kHeaderBytes + payload;
            st.levels.push_back(s);
        }
        apply_schedule(st, 1);
        rep_.windows.push_back(trace(-1, 0, 0, 0, st));
    }

    // Installs c_eta, eta, expected bits and t_hat from window statistics whose
    // total_bits are level totals per super-block times num_blocks.
    void apply_schedule(const LevelStats& st, long long num_blocks) {
        const bool any = std::any_of(st.levels.begin(), st.levels.end(), [](const LevelStat& s) { return s.present(); });
        if (!any) return;
        c_eta_ = compute_c_eta_flat(st, num_blocks, cfg_.target_time);
        if (ever_seen_.empty()) ever_seen_.assign(static_cast<std::size_t>(L_), false);
        for (int l = 0; l < L_; ++l)
            if (st.levels[static_cast<std::size_t>(l)].present()) ever_seen_[static_cast<std::size_t>(l)] = true;
        eta_ = tree_like() ? eta_levels_tree(c_eta_, st, 2, eta_) : eta_levels_flat(c_eta_, st, eta_);
        beta_bar_.assign(static_cast<std::size_t>(L_), 0.0);
        exp_bits_.assign(static_cast<std::size_t>(L_), 0.0);
        for (int l = 0; l < L_; ++l) {
            const auto& s = st.levels[static_cast<std::size_t>(l)];
            if (s.present()) beta_bar_[static_cast<std::size_t>(l)] = s.mean_beta;
            const double shards = tree_like() ? std::ldexp(1.0, l) : 1.0;
            exp_bits_[static_cast<std::size_t>(l)] = s.total_bits / static_cast<double>(num_blocks) / shards;
        }
        if (cfg_.mode != Mode::concurrent || t_hat_.empty()) t_hat_ = time_per_level(eta_, exp_bits_);
        std::vector<double> seen_eta;
        for (int l = 0; l < L_; ++l)
            if (ever_seen_[static_cast<std::size_t>(l)]) seen_eta.push_back(eta_[static_cast<std::size_t>(l)]);
        if (!strictly_decreasing(seen_eta)) ++rep_.audits.monotonicity_violations;
        if (cfg_.mode == Mode::hybrid) {
            double tn = 0;
            for (int l = 1; l < L_; ++l) tn += t_hat_[static_cast<std::size_t>(l)];
            lambda_ = homotopy_lambda(std::min(tn, cfg_.target_time), cfg_.target_time);
        }
    }

    WindowTrace trace(int index, double end_time, long long sbs, double mean_sb, const LevelStats& st) const {
        WindowTrace w;
        w.index = index;
        w.end_time = end_time;
        w.superblocks = sbs;
        w.mean_superblock_time = mean_sb;
        w.c_eta = c_eta_;
        w.lambda = lambda_;
        w.eta = eta_;
        w.t_hat = t_hat_;
        w.beta_bar = beta_bar_;
        w.security.assign(static_cast<std::size_t>(L_), 0.0);
        for (int l = 0; l < L_; ++l) {
            const auto& s = st.levels[static_cast<std::size_t>(l)];
            if (!s.present()) continue;
            const double h = tree_like() ? h_B_ / std::ldexp(1.0, l) : h_B_;
            w.security[static_cast<std::size_t>(l)] = h * eta_[static_cast<std::size_t>(l)] / s.mean_beta;
        }
        w.reward_sat = window_reward_;
        return w;
    }

    void genesis() {
        for (int k = 0; k < cfg_.genesis_outputs; ++k) {
            const Digest id = counter_id(0, static_cast<std::uint64_t>(k));
            insert_output(id, cfg_.genesis_value);
            wallet_.push_back(id);
            genesis_total_ += cfg_.genesis_value;
        }
        full_recount();
    }

    // ---- ledger ------------------------------------------------------------

    void insert_output(const Digest& id, std::int64_t value) {
        if (!state_.utxo.emplace(id, value).second) {
            ++rep_.audits.utxo_violations;
            return;
        }
        unspent_sum_ += value;
    }

    static Digest output_id(const Digest& txid, std::uint8_t k) {
        std::uint8_t buf[33];
        std::copy(txid.begin(), txid.end(), buf);
        buf[32] = k;
        return sha256(buf, sizeof buf);
    }

    void apply_tx(const PendingTx& p) {
        auto it = state_.utxo.find(p.tx.input_ref);
        if (it == state_.utxo.end()) {
            ++rep_.audits.double_accepts;
            return;
        }
        const std::int64_t in = it->second;
        state_.utxo.erase(it);
        unspent_sum_ -= in;
        insert_output(output_id(p.tx.id, 0), p.tx.value);
        const std::int64_t change = in - p.tx.value - p.fee;
        if (change > 0) {
            const Digest cid = output_id(p.tx.id, 1);
            insert_output(cid, change);
            wallet_.push_back(cid);
        }
        fees_ += p.fee;
        ++rep_.txs_confirmed;
    }

    void mint(std::int64_t sat) {
        if (sat <= 0) return;
        insert_output(counter_id(3, mint_counter_++), sat);
        minted_ += sat;
        window_reward_ += sat;
    }

    void check_conservation() {
        ++rep_.audits.conservation_checks;
        if (unspent_sum_ + fees_ != minted_ + genesis_total_) ++rep_.audits.conservation_violations;
    }

    void full_recount() {
        std::int64_t s = 0;
        for (const auto& [id, v] : state_.utxo) s += v;
        ++rep_.audits.full_recounts;
        if (s != unspent_sum_ || s + fees_ != minted_ + genesis_total_) ++rep_.audits.conservation_violations;
    }

    // Returns a dropped tx's input to the wallet. Adversarial pairs share one
    // input, so theirs is never returned.
    void unreserve(const PendingTx& p) {
        if (!p.adversarial && state_.utxo.count(p.tx.input_ref)) wallet_.push_back(p.tx.input_ref);
    }

    // ---- workload ----------------------------------------------------------

    std::int64_t fee_for(int level, std::int64_t bits) const {
        if (eta_.empty() || !(eta_[0] > 0)) return 0;
        double ratio = eta_[static_cast<std::size_t>(level)] / eta_[0];
        if (tree_like()) ratio /= std::ldexp(1.0, level);
        return std::llround(cfg_.ref_fee_sat_per_bit * ratio * static_cast<double>(bits));
    }

    std::size_t bucket_of(const PendingTx& p) const {
        if (cfg_.mode != Mode::concurrent) return static_cast<std::size_t>(p.level);
        const ShardCoord c = tx_shard(p.level, p.tx);
        return (std::size_t{1} << p.level) - 1 + c.index();
    }

    std::optional<std::size_t> generate_tx(double when) {
        ++rep_.txs_generated;
        TxDraw d = draw_tx(cfg_.workload, rng_);
        std::optional<int> ov = draw_override(cfg_.workload, L_, rng_);
        const int level = ov ? *ov : level_for_beta(boundaries_, d.beta);
        PendingTx p;
        p.tx.size_bytes = d.size_bytes;
        p.fee = fee_for(level, p.tx.bits());
        if (wallet_.empty()) {
            ++rep_.audits.unfunded;
            return std::nullopt;
        }
        const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, wallet_.size() - 1)(rng_);
        const Digest input = wallet_[pick];
        wallet_[pick] = wallet_.back();
        wallet_.pop_back();
        const std::int64_t avail = state_.utxo.at(input);
        std::int64_t value = d.value;
        if (value + p.fee + 1 > avail) value = avail - p.fee - 1;
        if (value < 1) {
            wallet_.push_back(input);
            ++rep_.audits.unfunded;
            return std::nullopt;
        }
        p.tx.id = counter_id(2, tx_counter_++);
        p.tx.input_ref = input;
        p.tx.value = value;
        p.tx.requested_level = ov;
        p.tx.eta = eta_.empty() ? std::nullopt : std::optional<double>(eta_[static_cast<std::size_t>(level)]);
        p.arrival = when;
        p.level = level;
        const std::size_t b = bucket_of(p);
        if (auto ev = mempool_.add(b, std::move(p))) {
            ++rep_.audits.mempool_dropped;
            unreserve(*ev);
        }
        return b;
    }

    void pump(double t) {
        while (next_arrival_ <= t) {
            generate_tx(next_arrival_);
            next_arrival_ += next_arrival_gap(cfg_.workload, rng_);
        }
    }

    std::vector<PendingTx> take_greedy(std::size_t bucket, std::int64_t cap_bits) {
        std::vector<std::pair<Mempool::Key, std::int64_t>> cands;
        for (const auto& [k, p] : mempool_.bucket(bucket)) cands.push_back({k, p.tx.bits()});
        std::vector<PendingTx> out;
        for (const auto& k : greedy_fill(cands, cap_bits)) out.push_back(mempool_.take(bucket, k));
        return out;
    }

    // ---- block bookkeeping -------------------------------------------------

    void record_block(const SubBlock& b, std::size_t ntx) {
        const auto l = static_cast<std::size_t>(b.coord.level);
        ++level_blocks_[l];
        level_txs_[l] += static_cast<long long>(ntx);
        level_bits_sum_[l] += static_cast<double>(b.size_bits);
        mining_times_[l].push_back(b.mined_at - b.started_at);
        if (!cfg_.record_blocks) return;
        BlockRecord r;
        r.level = b.coord.level;
        r.shard = b.coord.index();
        r.seq = b.seq;
        r.started_at = b.started_at;
        r.mined_at = b.mined_at;
        r.visible_at = b.visible_at;
        r.size_bits = b.size_bits;
        r.ntx = static_cast<long long>(ntx);
        r.digest = to_hex(b.digest);
        r.parent = to_hex(b.parent_ref);
        for (const auto& c : b.child_refs) r.children.push_back(to_hex(c));
        rep_.blocks.push_back(std::move(r));
    }

    void reset_window() {
        win_count_.assign(static_cast<std::size_t>(L_), 0.0);
        win_beta_.assign(static_cast<std::size_t>(L_), 0.0);
        win_bits_.assign(static_cast<std::size_t>(L_), 0.0);
        win_sb_time_ = 0;
        win_sbs_ = 0;
        window_reward_ = 0;
        window_withheld_ = 0;
    }

    void window_add(int level, const std::vector<PendingTx>& txs, std::int64_t bits) {
        const auto l = static_cast<std::size_t>(level);
        for (const auto& p : txs) win_beta_[l] += value_per_bit(p.tx);
        win_count_[l] += static_cast<double>(txs.size());
        win_bits_[l] += static_cast<double>(bits);
    }

    LevelStats window_stats() const {
        LevelStats st;
        for (int l = 0; l < L_; ++l) {
            LevelStat s;
            const auto k = static_cast<std::size_t>(l);
            s.count = static_cast<std::size_t>(win_count_[k]);
            if (s.count > 0) s.mean_beta = win_beta_[k] / win_count_[k];
            s.total_bits = win_bits_[k];
            st.levels.push_back(s);
        }
        return st;
    }

    bool stop(double t, long long sbs) const {
        if (cfg_.duration > 0) return t >= cfg_.duration;
        return sbs >= cfg_.max_superblocks;
    }

    double mining_mean_bits(int level, std::int64_t actual_bits) const {
        return cfg_.difficulty_basis == DifficultyBasis::schedule ? exp_bits_[static_cast<std::size_t>(level)]
                                                                  : static_cast<double>(actual_bits);
    }

    // ---- flat and hybrid ---------------------------------------------------

    void run_sequential(bool hybrid) {
        const int W = cfg_.retarget_window;
        const std::int64_t cap = cfg_.max_block_bits - 8 * kHeaderBytes;
        const std::int64_t r_sat = btc_to_sat(cfg_.block_reward);
        std::vector<Digest> tip(static_cast<std::size_t>(L_));
        std::vector<long long> seq(static_cast<std::size_t>(L_), 0);
        double t = 0;
        long long sb = 0;
        std::vector<int> order;
        if (hybrid) {
            order.push_back(0);
            for (int l = L_ - 1; l >= 1; --l) order.push_back(l);
        } else {
            for (int l = L_ - 1; l >= 0; --l) order.push_back(l);
        }
        Digest prev_link{};
        while (!stop(t, sb)) {
            const double sb_start = t;
            const bool whole = cfg_.broadcast == Broadcast::whole_multiblock;
            struct Mined {
                SubBlock b;
                std::vector<PendingTx> txs;
                double draw_mean = 0;
            };
            std::vector<Mined> mined;
            // In hybrid mode the legacy block is mined on its own and the
            // broadcast policy applies to the multi-block part.
            std::size_t group_start = 0;
            auto mine_group = [&](std::size_t from, std::size_t to) {
                if (whole) {
                    pump(t);
                    double mean_total = 0;
                    std::vector<Mined> g;
                    for (std::size_t k = from; k < to; ++k) {
                        const int l = order[k];
                        Mined m;
                        m.txs = take_greedy(static_cast<std::size_t>(l), cap);
                        m.b.coord = ShardCoord::at(l, 0);
                        m.b.size_bits = 8 * kHeaderBytes;
                        for (const auto& p : m.txs) m.b.size_bits += p.tx.bits();
                        m.draw_mean = eta_[static_cast<std::size_t>(l)] * mining_mean_bits(l, m.b.size_bits);
                        mean_total += m.draw_mean;
                        g.push_back(std::move(m));
                    }
                    const double dt = sample_mining_time(rng_, mean_total, 1.0, 1.0);
                    for (auto& m : g) {
                        m.b.started_at = t;
                        m.b.mined_at = t + dt;
                        mined.push_back(std::move(m));
                    }
                    t += dt;
                } else {
                    for (std::size_t k = from; k < to; ++k) {
                        const int l = order[k];
                        pump(t);
                        Mined m;
                        m.txs = take_greedy(static_cast<std::size_t>(l), cap);
                        m.b.coord = ShardCoord::at(l, 0);
                        m.b.size_bits = 8 * kHeaderBytes;
                        for (const auto& p : m.txs) m.b.size_bits += p.tx.bits();
                        m.draw_mean = eta_[static_cast<std::size_t>(l)] * mining_mean_bits(l, m.b.size_bits);
                        const double dt = sample_mining_time(rng_, eta_[static_cast<std::size_t>(l)],
                                                             mining_mean_bits(l, m.b.size_bits), 1.0);
                        m.b.started_at = t;
                        m.b.mined_at = t + dt;
                        t += dt;
                        mined.push_back(std::move(m));
                    }
                }
            };
            if (hybrid) {
                // legacy block: always a single sub-block
                pump(t);
                Mined m;
                m.txs = take_greedy(0, cap);
                m.b.coord = ShardCoord::at(0, 0);
                m.b.size_bits = 8 * kHeaderBytes;
                for (const auto& p : m.txs) m.b.size_bits += p.tx.bits();
                m.draw_mean = eta_[0] * mining_mean_bits(0, m.b.size_bits);
                const double dt = sample_mining_time(rng_, eta_[0], mining_mean_bits(0, m.b.size_bits), 1.0);
                m.b.started_at = t;
                m.b.mined_at = t + dt;
                t += dt;
                mined.push_back(std::move(m));
                group_start = 1;
            }
            mine_group(group_start, order.size());

            // visibility
            std::int64_t group_bytes = 0;
            for (std::size_t k = group_start; k < mined.size(); ++k) group_bytes += mined[k].b.size_bits / 8;
            for (std::size_t k = 0; k < mined.size(); ++k) {
                auto& b = mined[k].b;
                const bool batched = k >= group_start && cfg_.broadcast != Broadcast::per_subblock;
                b.visible_at = batched ? mined.back().b.mined_at + propagation_delay(group_bytes, prop_)
                                       : b.mined_at + propagation_delay(b.size_bits / 8, prop_);
            }
            const double root_visible_multi = mined.back().b.visible_at;

            // rewards for this super-block
            std::vector<std::int64_t> rewards(static_cast<std::size_t>(L_), 0);
            if (hybrid) {
                const std::int64_t multi = std::llround(lambda_ * static_cast<double>(r_sat));
                std::vector<double> w(t_hat_.begin() + 1, t_hat_.end());
                if (std::accumulate(w.begin(), w.end(), 0.0) <= 0) std::fill(w.begin(), w.end(), 1.0);
                auto split = largest_remainder(w, multi);
                rewards[0] = r_sat - multi;
                for (std::size_t l = 1; l < rewards.size(); ++l) rewards[l] = split[l - 1];
            } else {
                rewards = reward_split_flat_sat(t_hat_, r_sat);
            }

            for (std::size_t k = 0; k < mined.size(); ++k) {
                auto& m = mined[k];
                auto& b = m.b;
                const auto l = static_cast<std::size_t>(b.coord.level);
                b.seq = seq[l]++;
                b.parent_ref = prev_link;
                for (const auto& p : m.txs) b.txs.push_back(p.tx);
                const Verdict v = validate_block(b, state_);
                if (!v.ok) count_rejection(v.code);
                b.digest = compute_block_digest(b);
                prev_link = b.digest;
                tip[l] = b.digest;
                for (const auto& p : m.txs) {
                    apply_tx(p);
                    incl_lat_[l].push_back(b.visible_at - p.arrival);
                    const double root = (hybrid && l == 0) ? b.visible_at : root_visible_multi;
                    root_lat_[l].push_back(root - p.arrival);
                }
                draw_means_[l].push_back(m.draw_mean);
                mint(rewards[l]);
                level_reward_[l] += rewards[l];
                window_add(b.coord.level, m.txs, b.size_bits);
                record_block(b, m.txs.size());
                check_conservation();
            }

            const double sb_time = t - sb_start;
            rep_.superblock_times.push_back(sb_time);
            win_sb_time_ += sb_time;
            ++win_sbs_;
            ++sb;
            if (sb % W == 0) end_window(t, W, r_sat);
        }
        rep_.superblocks = sb;
        rep_.sim_time = t;
    }

    void end_window(double t, int W, std::int64_t r_sat) {
        const LevelStats st = window_stats();
        if (window_reward_ + window_withheld_ != static_cast<std::int64_t>(W) * r_sat)
            ++rep_.audits.reward_window_mismatches;
        const double mean_sb = win_sbs_ ? win_sb_time_ / static_cast<double>(win_sbs_) : 0.0;
        const std::int64_t reward = window_reward_;
        apply_schedule(st, W);
        WindowTrace w = trace(static_cast<int>(rep_.windows.size()) - 1, t, win_sbs_, mean_sb, st);
        w.reward_sat = reward;
        rep_.windows.push_back(std::move(w));
        full_recount();
        reset_window();
    }

    void count_rejection(const std::string& code) {
        if (code == "E_SHARD_MISMATCH") ++rep_.audits.rejected_shard_mismatch;
        else if (code == "E_DOUBLE_SPEND") ++rep_.audits.rejected_double_spend;
        else if (code == "E_MULTI_INPUT_SHARDED") ++rep_.audits.rejected_multi_input;
        else if (code == "E_BAD_CARRIED_AVERAGE") ++rep_.audits.rejected_bad_average;
    }

    // ---- tree --------------------------------------------------------------

    std::vector<std::vector<double>> shard_scales(const std::optional<Digest>& nonce) const {
        const int leaf_level = L_ - 1;
        std::vector<double> leaf(std::size_t{1} << leaf_level, 0.0);
        for (const auto& m : miners_) leaf[shard_path(leaf_level, m.peer_id, nonce).index()] += m.hashrate;
        std::vector<std::vector<double>> sc(static_cast<std::size_t>(L_));
        for (int l = 0; l < L_; ++l) {
            auto& row = sc[static_cast<std::size_t>(l)];
            row.assign(std::size_t{1} << l, 0.0);
            for (std::size_t s = 0; s < leaf.size(); ++s) row[s >> (leaf_level - l)] += leaf[s];
            for (auto& x : row) x /= h_B_ / std::ldexp(1.0, l);
        }
        return sc;
    }

    void inject_double_spends(const Digest& nonce, double when) {
        for (int k = 0; k < cfg_.double_spend_attempts_per_round && L_ >= 2; ++k) {
            if (wallet_.empty()) return;
            ++rep_.audits.double_spend_attempts;
            rep_.txs_generated += 2;
            const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, wallet_.size() - 1)(rng_);
            const Digest input = wallet_[pick];
            wallet_[pick] = wallet_.back();
            wallet_.pop_back();
            const int level = std::uniform_int_distribution<int>(1, L_ - 1)(rng_);
            const std::int64_t avail = state_.utxo.at(input);
            PendingTx a;
            a.tx.id = counter_id(4, adv_counter_++);
            a.tx.input_ref = input;
            a.tx.size_bytes = 250;
            a.tx.value = std::max<std::int64_t>(1, std::min<std::int64_t>(avail / 4, 1000000));
            a.level = level;
            a.arrival = when;
            a.fee = fee_for(level, a.tx.bits());
            a.adversarial = true;
            PendingTx b = a;
            b.tx.id = counter_id(4, adv_counter_++);
            const ShardCoord home = tx_shard(level, a.tx, nonce);
            ShardCoord other = home;
            if (std::uniform_int_distribution<int>(0, 1)(rng_)) other.bits.back() ^= 1u;
            b.forced = other;
            for (PendingTx* p : {&a, &b})
                if (auto ev = mempool_.add(static_cast<std::size_t>(level), *p)) {
                    ++rep_.audits.mempool_dropped;
                    unreserve(*ev);
                }
        }
    }

    void run_tree() {
        const int W = cfg_.retarget_window;
        const std::int64_t cap = cfg_.max_block_bits - 8 * kHeaderBytes;
        const std::int64_t r_sat = btc_to_sat(cfg_.block_reward);
        state_.sharded = true;
        state_.L = L_;
        state_.nonce = sha256(std::string_view("hbs genesis nonce"));
        std::map<std::pair<int, std::uint64_t>, Digest> tips;
        std::map<std::pair<int, std::uint64_t>, long long> seqs;
        std::vector<TreeRawRecord> raw;
        double t = 0;
        long long round = 0;
        while (!stop(t, round)) {
            const int i = static_cast<int>(round % W);
            const int win = static_cast<int>(round / W);
            const Digest nonce = *state_.nonce;
            const auto scales = shard_scales(nonce);
            const double round_start = t;
            pump(t);
            inject_double_spends(nonce, t);

            // candidates per (level, shard), in priority order
            std::vector<std::map<std::uint64_t, std::vector<std::pair<Mempool::Key, std::int64_t>>>> cand(
                static_cast<std::size_t>(L_));
            for (int l = 0; l < L_; ++l) {
                std::vector<Mempool::Key> bad;
                for (const auto& [k, p] : mempool_.bucket(static_cast<std::size_t>(l))) {
                    ShardCoord c;
                    if (p.forced) {
                        c = *p.forced;
                    } else {
                        try {
                            c = tx_shard(l, p.tx, nonce);
                        } catch (const Error& e) {
                            count_rejection(e.code());
                            bad.push_back(k);
                            continue;
                        }
                    }
                    cand[static_cast<std::size_t>(l)][c.index()].push_back({k, p.tx.bits()});
                }
                for (const auto& k : bad) {
                    ++rep_.audits.invalid_dropped;
                    unreserve(mempool_.take(static_cast<std::size_t>(l), k));
                }
            }

            struct Mined {
                SubBlock b;
                std::vector<PendingTx> txs;
            };
            std::map<std::pair<int, std::uint64_t>, Mined> done;
            std::map<std::pair<int, std::uint64_t>, Digest> Rs;
            LocalRandomness locals;
            bool any_stall = false;
            std::vector<std::int64_t> level_share = largest_remainder(t_hat_, r_sat);

            for (int l = L_ - 1; l >= 0; --l) {
                const auto lz = static_cast<std::size_t>(l);
                for (std::uint64_t s = 0; s < (std::uint64_t{1} << l); ++s) {
                    const Digest local = random_digest(rng_);
                    locals[{l, s}] = local;
                    const double scale = scales[lz][s];
                    std::int64_t shard_reward = level_share[lz] >> l;
                    if (s < static_cast<std::uint64_t>(level_share[lz] % (std::int64_t{1} << l))) ++shard_reward;
                    raw.push_back({win, i, l, s, false, 0, 0, 0});
                    if (!(scale > 0)) {
                        any_stall = true;
                        ++level_stalled_[lz];
                        Rs[{l, s}] = Digest{};
                        window_withheld_ += shard_reward;
                        continue;
                    }
                    Mined m;
                    SubBlock& b = m.b;
                    b.coord = ShardCoord::at(l, s);
                    double start = round_start;
                    std::vector<const Carried*> kids;
                    if (l < L_ - 1) {
                        for (std::uint64_t c : {2 * s, 2 * s + 1}) {
                            auto it = done.find({l + 1, c});
                            if (it != done.end()) {
                                start = std::max(start, it->second.b.visible_at);
                                b.child_refs.push_back(it->second.b.digest);
                            }
                            auto pc = state_.prev_carried.find({l + 1, c});
                            kids.push_back(pc == state_.prev_carried.end() ? nullptr : &pc->second);
                        }
                    }
                    // honest assembly: drop txs the validator rejects
                    auto& pool = cand[lz][s];
                    for (;;) {
                        auto keys = greedy_fill(pool, cap);
                        b.txs.clear();
                        m.txs.clear();
                        for (const auto& k : keys) {
                            m.txs.push_back(mempool_.bucket(lz).at(k));
                            b.txs.push_back(m.txs.back().tx);
                        }
                        b.carried.enabled = false;
                        const Verdict v = validate_block(b, state_);
                        if (v.ok) {
                            for (const auto& k : keys) mempool_.take(lz, k);
                            break;
                        }
                        count_rejection(v.code);
                        ++rep_.audits.invalid_dropped;
                        const Mempool::Key badk = keys[*v.tx_index];
                        pool.erase(std::find_if(pool.begin(), pool.end(), [&](const auto& e) { return e.first == badk; }));
                        unreserve(mempool_.take(lz, badk));
                    }
                    b.size_bits = block_bits(b.txs);
                    b.carried.enabled = true;
                    b.carried.i = i;
                    if (l == L_ - 1) {
                        b.carried.R = sha256(local.data(), local.size());
                    } else {
                        const Digest& ra = Rs.at({l + 1, 2 * s});
                        const Digest& rb = Rs.at({l + 1, 2 * s + 1});
                        b.carried.R = sha256_concat({&local, &ra, &rb});
                    }
                    auto pc = state_.prev_carried.find({l, s});
                    Carried filled = expected_carried(b, pc == state_.prev_carried.end() ? nullptr : &pc->second, kids, L_);
                    if (l == 0 && i == W - 1) filled.c_eta = c_eta_from_root_sum(cfg_.target_time, filled.s);
                    b.carried = filled;
                    const Verdict full = validate_block(b, state_, kids);
                    if (!full.ok) count_rejection(full.code);
                    Rs[{l, s}] = b.carried.R;

                    const double eta = eta_[lz];
                    const double bits_for_draw = mining_mean_bits(l, b.size_bits);
                    const double dt = sample_mining_time(rng_, eta, bits_for_draw, scale);
                    draw_means_[lz].push_back(eta * bits_for_draw / scale);
                    b.started_at = start;
                    b.mined_at = start + dt;
                    b.visible_at = b.mined_at + propagation_delay(b.size_bits / 8, prop_);
                    b.seq = seqs[{l, s}]++;
                    b.parent_ref = tips[{l, s}];
                    b.digest = compute_block_digest(b);
                    tips[{l, s}] = b.digest;
                    for (const auto& p : m.txs) {
                        apply_tx(p);
                        incl_lat_[lz].push_back(b.visible_at - p.arrival);
                    }
                    state_.prev_carried[{l, s}] = b.carried;
                    auto& rr = raw.back();
                    rr.mined = true;
                    rr.beta_sum = block_beta_sum(b.txs);
                    rr.count = static_cast<double>(b.txs.size());
                    rr.bits = static_cast<double>(b.size_bits);
                    mint(shard_reward);
                    level_reward_[lz] += shard_reward;
                    window_add(l, m.txs, b.size_bits);
                    record_block(b, m.txs.size());
                    check_conservation();
                    done.emplace(std::make_pair(l, s), std::move(m));
                }
            }
            const SubBlock& root = done.at({0, 0}).b;
            for (const auto& [key, m] : done)
                for (const auto& p : m.txs)
                    root_lat_[static_cast<std::size_t>(key.first)].push_back(root.visible_at - p.arrival);
            if (!any_stall && fold_global_nonce(locals, L_).value != root.carried.R) ++rep_.audits.nonce_mismatches;
            state_.nonce = root.carried.R;
            t = root.mined_at;
            rep_.superblock_times.push_back(t - round_start);
            win_sb_time_ += t - round_start;
            ++win_sbs_;
            ++round;

            if (i == W - 1) {
                const Carried& rc = root.carried;
                const LevelStats wst = window_stats();
                if (window_reward_ + window_withheld_ != static_cast<std::int64_t>(W) * r_sat)
                    ++rep_.audits.reward_window_mismatches;
                const double mean_sb = win_sb_time_ / static_cast<double>(win_sbs_);
                const std::int64_t reward = window_reward_;
                // schedule from header data only
                c_eta_ = *rc.c_eta;
                LevelStats hs;
                for (int l = 0; l < L_; ++l) {
                    LevelStat s;
                    const auto k = static_cast<std::size_t>(l);
                    if (rc.sub_count[k] > 0) {
                        s.count = 1;
                        s.mean_beta = rc.sub_beta[k] / rc.sub_count[k];
                    }
                    s.total_bits = rc.sub_bits[k];
                    hs.levels.push_back(s);
                }
                eta_ = eta_levels_tree(c_eta_, hs, 2, eta_);
                for (int l = 0; l < L_; ++l) {
                    const auto k = static_cast<std::size_t>(l);
                    if (hs.levels[k].present()) {
                        beta_bar_[k] = hs.levels[k].mean_beta;
                        ever_seen_[k] = true;
                    }
                    exp_bits_[k] = rc.sub_bits[k] / std::ldexp(1.0, l);
                }
                t_hat_ = time_per_level(eta_, exp_bits_);
                WindowTrace w = trace(static_cast<int>(rep_.windows.size()) - 1, t, win_sbs_, mean_sb, hs);
                w.reward_sat = reward;
                rep_.windows.push_back(std::move(w));
                (void)wst;

                TreeReplay rp = replay_tree_c_eta(raw, L_, W, cfg_.target_time);
                TreeWindowCheck chk;
                chk.window = win;
                chk.c_eta_inband = c_eta_;
                chk.c_eta_replay = rp.c_eta.back();
                chk.c_eta_batch = rp.batch.back();
                chk.c_eta_pooled = rp.pooled.back();
                chk.replay_exact = chk.c_eta_replay == chk.c_eta_inband;
                if (!chk.replay_exact) ++rep_.audits.tree_c_eta_mismatches;
                rep_.tree_checks.push_back(chk);
                full_recount();
                reset_window();
                // keep only what future replays need: the records are replayed
                // from the start, so they are retained
            }
        }
        if (cfg_.record_tree_raw) rep_.tree_raw = std::move(raw);
        rep_.superblocks = round;
        rep_.sim_time = t;
    }

    // ---- concurrent --------------------------------------------------------

    void run_concurrent() {
        const int W = cfg_.retarget_window;
        const std::int64_t cap = cfg_.max_block_bits - 8 * kHeaderBytes;
        const std::int64_t r_sat = btc_to_sat(cfg_.block_reward);
        state_.sharded = true;
        state_.L = L_;
        state_.nonce.reset();
        const auto scales = shard_scales(std::nullopt);
        const std::size_t nchains = (std::size_t{1} << L_) - 1;
        auto coord_of = [](std::size_t idx) {
            int l = 0;
            while ((std::size_t{1} << (l + 1)) - 1 <= idx) ++l;
            return ShardCoord::at(l, idx - ((std::size_t{1} << l) - 1));
        };
        auto index_of = [](int l, std::uint64_t s) { return (std::size_t{1} << l) - 1 + s; };

        struct BlockInfo {
            int level = 0;
            double visible = 0;
            long long referenced_by = -1;
            int refs = 0;
        };
        struct TxRec {
            double arrival;
            long long block;
            int level;
        };
        std::vector<BlockInfo> blocks;
        std::vector<TxRec> txrecs;
        struct ChainRun {
            bool busy = false;
            SubBlock b;
            std::vector<PendingTx> txs;
            std::vector<long long> child_ids;
            std::vector<long long> waiting;  // visible, unreferenced child blocks
            std::vector<Digest> waiting_digest;
            Digest tip{};
            long long seq = 0;
        };
        std::vector<ChainRun> chains(nchains);
        struct Ev {
            double t;
            long long seq;
            int type;  // 0 found, 1 visible
            std::size_t chain;
            long long block;
            bool operator>(const Ev& o) const { return t != o.t ? t > o.t : seq > o.seq; }
        };
        std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> pq;
        long long evseq = 0;
        long long roots = 0;
        bool arrivals_open = true;
        double now = 0;
        const std::vector<std::vector<std::int64_t>> shard_reward = reward_split_tree_sat(t_hat_, L_, r_sat);

        auto try_start = [&](std::size_t ci, double t) {
            ChainRun& ch = chains[ci];
            if (ch.busy) return;
            const ShardCoord c = coord_of(ci);
            const auto lz = static_cast<std::size_t>(c.level);
            const double scale = scales[lz][c.index()];
            if (!(scale > 0)) {
                if (mempool_.size(ci) || !ch.waiting.empty()) ++level_stalled_[lz];
                return;
            }
            ch.txs = take_greedy(ci, cap);
            std::size_t nref = ch.waiting.size();
            if (cfg_.max_batch > 0) nref = std::min<std::size_t>(nref, static_cast<std::size_t>(cfg_.max_batch));
            if (ch.txs.empty() && nref == 0) return;
            ch.b = SubBlock{};
            ch.b.coord = c;
            for (const auto& p : ch.txs) ch.b.txs.push_back(p.tx);
            const Verdict v = validate_block(ch.b, state_);
            if (!v.ok) count_rejection(v.code);
            ch.child_ids.assign(ch.waiting.begin(), ch.waiting.begin() + static_cast<std::ptrdiff_t>(nref));
            ch.b.child_refs.assign(ch.waiting_digest.begin(), ch.waiting_digest.begin() + static_cast<std::ptrdiff_t>(nref));
            ch.waiting.erase(ch.waiting.begin(), ch.waiting.begin() + static_cast<std::ptrdiff_t>(nref));
            ch.waiting_digest.erase(ch.waiting_digest.begin(), ch.waiting_digest.begin() + static_cast<std::ptrdiff_t>(nref));
            ch.b.size_bits = block_bits(ch.b.txs);
            ch.b.started_at = t;
            double mean;
            if (cfg_.difficulty_basis == DifficultyBasis::schedule)
                mean = t_hat_[lz];
            else
                mean = eta_[lz] * static_cast<double>(ch.b.size_bits);
            const double dt = sample_mining_time(rng_, mean, 1.0, scale);
            draw_means_[lz].push_back(mean / scale);
            ch.b.mined_at = t + dt;
            ch.busy = true;
            pq.push({ch.b.mined_at, evseq++, 0, ci, -1});
        };

        for (;;) {
            const double t_ev = pq.empty() ? std::numeric_limits<double>::infinity() : pq.top().t;
            const double t_arr = arrivals_open ? next_arrival_ : std::numeric_limits<double>::infinity();
            if (std::isinf(t_ev) && std::isinf(t_arr)) break;
            if (t_arr <= t_ev) {
                if (stop(t_arr, roots)) {
                    arrivals_open = false;
                    continue;
                }
                now = t_arr;
                auto b = generate_tx(t_arr);
                next_arrival_ += next_arrival_gap(cfg_.workload, rng_);
                if (b) try_start(*b, now);
                continue;
            }
            Ev ev = pq.top();
            pq.pop();
            now = ev.t;
            ChainRun& ch = chains[ev.chain];
            if (ev.type == 1) {
                const ShardCoord c = coord_of(ev.chain);
                const std::size_t parent = index_of(c.level - 1, c.index() >> 1);
                chains[parent].waiting.push_back(ev.block);
                chains[parent].waiting_digest.push_back(block_digests_[static_cast<std::size_t>(ev.block)]);
                try_start(parent, now);
                continue;
            }
            // block found
            SubBlock& b = ch.b;
            const auto lz = static_cast<std::size_t>(b.coord.level);
            b.visible_at = b.mined_at + propagation_delay(b.size_bits / 8, prop_);
            b.seq = ch.seq++;
            b.parent_ref = ch.tip;
            b.digest = compute_block_digest(b);
            ch.tip = b.digest;
            const long long id = static_cast<long long>(blocks.size());
            blocks.push_back({b.coord.level, b.visible_at, -1, 0});
            block_digests_.push_back(b.digest);
            for (long long cid : ch.child_ids) {
                auto& cb = blocks[static_cast<std::size_t>(cid)];
                ++cb.refs;
                if (cb.referenced_by < 0) cb.referenced_by = id;
            }
            for (const auto& p : ch.txs) {
                apply_tx(p);
                txrecs.push_back({p.arrival, id, p.level});
                incl_lat_[lz].push_back(b.visible_at - p.arrival);
            }
            const std::int64_t rw = shard_reward[lz][b.coord.index()];
            mint(rw);
            level_reward_[lz] += rw;
            window_add(b.coord.level, ch.txs, b.size_bits);
            record_block(b, ch.txs.size());
            check_conservation();
            ch.busy = false;
            ch.txs.clear();
            ch.child_ids.clear();
            if (b.coord.level > 0) {
                pq.push({b.visible_at, evseq++, 1, ev.chain, id});
            } else {
                rep_.superblock_times.push_back(b.mined_at - b.started_at);
                win_sb_time_ += b.mined_at - b.started_at;
                ++win_sbs_;
                ++roots;
                if (roots % W == 0) {
                    const LevelStats st = window_stats();
                    const double mean_sb = win_sb_time_ / static_cast<double>(win_sbs_);
                    const std::int64_t reward = window_reward_;
                    apply_schedule(st, W);
                    WindowTrace w = trace(static_cast<int>(rep_.windows.size()) - 1, now, win_sbs_, mean_sb, st);
                    w.reward_sat = reward;
                    rep_.windows.push_back(std::move(w));
                    full_recount();
                    reset_window();
                }
                if (stop(now, roots)) arrivals_open = false;
            }
            try_start(ev.chain, now);
        }

        // root-path latency: a block reaches the root through its referencing chain
        std::vector<double> root_time(blocks.size(), -1.0);
        std::function<double(std::size_t)> rt = [&](std::size_t k) -> double {
            if (root_time[k] >= 0 || root_time[k] == -2.0) return root_time[k];
            const auto& bi = blocks[k];
            if (bi.level == 0) return root_time[k] = bi.visible;
            if (bi.referenced_by < 0) return root_time[k] = -2.0;
            const double r = rt(static_cast<std::size_t>(bi.referenced_by));
            return root_time[k] = r;
        };
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            if (blocks[k].level == 0) continue;
            if (blocks[k].refs == 0) ++rep_.audits.unreferenced_children;
            if (blocks[k].refs > 1) ++rep_.audits.multi_referenced_children;
        }
        for (const auto& tr : txrecs) {
            const double r = rt(static_cast<std::size_t>(tr.block));
            if (r >= 0) root_lat_[static_cast<std::size_t>(tr.level)].push_back(r - tr.arrival);
        }
        rep_.superblocks = roots;
        rep_.sim_time = now;
    }

    // ---- report ------------------------------------------------------------

    void finish() {
        full_recount();
        rep_.minted_sat = minted_;
        rep_.fees_sat = fees_;
        double sum_sb = 0;
        for (double x : rep_.superblock_times) sum_sb += x;
        rep_.mean_superblock_time = rep_.superblock_times.empty() ? 0 : sum_sb / rep_.superblock_times.size();
        const std::size_t warm = static_cast<std::size_t>(5) * static_cast<std::size_t>(cfg_.retarget_window);
        if (rep_.superblock_times.size() > warm) {
            double s = 0;
            for (std::size_t k = warm; k < rep_.superblock_times.size(); ++k) s += rep_.superblock_times[k];
            rep_.mean_superblock_time_after_warmup = s / static_cast<double>(rep_.superblock_times.size() - warm);
        }
        double total_bytes = 0;
        for (int l = 0; l < L_; ++l) {
            const auto k = static_cast<std::size_t>(l);
            LevelReport lr;
            lr.level = l;
            lr.blocks = level_blocks_[k];
            lr.txs = level_txs_[k];
            lr.stalled = level_stalled_[k];
            const auto& mt = mining_times_[k];
            lr.mean_mining_time = mt.empty() ? 0 : std::accumulate(mt.begin(), mt.end(), 0.0) / mt.size();
            const auto& dm = draw_means_[k];
            lr.mean_scheduled_time = dm.empty() ? 0 : std::accumulate(dm.begin(), dm.end(), 0.0) / dm.size();
            lr.expected_time = t_hat_.empty() ? 0 : t_hat_[k];
            lr.mean_block_bits = lr.blocks ? level_bits_sum_[k] / static_cast<double>(lr.blocks) : 0;
            lr.median_inclusion_latency = median_of(incl_lat_[k]);
            lr.median_root_latency = median_of(root_lat_[k]);
            lr.reward_sat = level_reward_[k];
            total_bytes += level_bits_sum_[k] / 8.0;
            rep_.levels.push_back(lr);
        }
        rep_.throughput = rep_.sim_time > 0 ? static_cast<double>(rep_.txs_confirmed) / rep_.sim_time : 0;
        const double mean_tx_bytes =
            rep_.txs_confirmed ? (total_bytes - static_cast<double>(kHeaderBytes) *
                                                    static_cast<double>(std::accumulate(level_blocks_.begin(),
                                                                                        level_blocks_.end(), 0LL))) /
                                     static_cast<double>(rep_.txs_confirmed)
                               : 250.0;
        rep_.mfn.tx_rate = rep_.throughput;
        if (rep_.throughput > 0) {
            rep_.mfn.store_rate = mfn_store_rate(rep_.throughput, L_);
            rep_.mfn.download_rate = mfn_download_rate(rep_.throughput, L_);
            rep_.mfn.storage_mb_day = per_day_mb(rep_.mfn.store_rate, mean_tx_bytes);
            rep_.mfn.download_mb_day = per_day_mb(rep_.mfn.download_rate, mean_tx_bytes);
        }
        NetworkParams net;
        net.total_hashrate = h_B_;
        net.target_superblock_time = cfg_.target_time;
        const EnergyCost blk = energy_per_tx(cfg_.energy, net, 1024 * 1024);
        rep_.energy.kwh_per_block = blk.kwh;
        rep_.energy.usd_per_block = blk.usd;
        rep_.energy.usd_per_mean_tx = energy_per_tx(cfg_.energy, net, std::llround(mean_tx_bytes)).usd;
        rep_.energy.rational_bound_kwh = energy_upper_bound(cfg_.energy);
    }

    SimConfig cfg_;
    std::mt19937_64 rng_;
    int L_;
    PropagationModel prop_;
    std::vector<MinerSpec> miners_;
    double h_B_ = 0;

    std::vector<double> boundaries_;
    double c_eta_ = 0;
    double lambda_ = 0;
    std::vector<double> eta_, exp_bits_, t_hat_, beta_bar_;
    std::vector<bool> ever_seen_;

    ChainState state_;
    std::vector<Digest> wallet_;
    std::int64_t unspent_sum_ = 0, fees_ = 0, minted_ = 0, genesis_total_ = 0;
    Mempool mempool_;
    double next_arrival_ = 0;
    std::uint64_t tx_counter_ = 0, mint_counter_ = 0, adv_counter_ = 0;
    std::vector<Digest> block_digests_;

    std::vector<double> win_count_, win_beta_, win_bits_;
    double win_sb_time_ = 0;
    long long win_sbs_ = 0;
    std::int64_t window_reward_ = 0, window_withheld_ = 0;

    std::vector<std::vector<double>> incl_lat_, root_lat_, mining_times_, draw_means_;
    std::vector<long long> level_blocks_, level_txs_, level_stalled_;
    std::vector<double> level_bits_sum_;
    std::vector<std::int64_t> level_reward_;

    SimReport rep_;
};

inline SimReport run_flat(SimConfig cfg) {
    cfg.mode = Mode::flat;
    return Simulator(std::move(cfg)).run();
}

inline SimReport run_hybrid(SimConfig cfg) {
    cfg.mode = Mode::hybrid;
    return Simulator(std::move(cfg)).run();
}

inline SimReport run_tree(SimConfig cfg) {
    cfg.mode = Mode::tree;
    return Simulator(std::move(cfg)).run();
}

inline SimReport run_concurrent(SimConfig cfg) {
    cfg.mode = Mode::concurrent;
    return Simulator(std::move(cfg)).run();
}

inline SimReport simulate(const SimConfig& cfg) { return Simulator(cfg).run(); }

// Independent runs with seeds seed, seed+1, ... on worker threads.
inline std::vector<SimReport> simulate_runs(const SimConfig& cfg, int runs) {
    std::vector<std::future<SimReport>> fut;
    for (int k = 0; k < runs; ++k) {
        SimConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(k);
        fut.push_back(std::async(std::launch::async, [c] { return Simulator(c).run(); }));
    }
    std::vector<SimReport> out;
    for (auto& f : fut) out.push_back(f.get());
    return out;
}

}  // namespace hbs
