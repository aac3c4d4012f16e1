#pragma once

#include "hbs/sim_config.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hbs {

struct WindowTrace {
    int index = 0;
    double end_time = 0;
    long long superblocks = 0;
    double mean_superblock_time = 0;
    double c_eta = 0;
    double lambda = 0;
    std::vector<double> eta;
    std::vector<double> t_hat;
    std::vector<double> beta_bar;
    std::vector<double> security;  // h_l * eta_l / beta_bar_l
    std::int64_t reward_sat = 0;
};

struct LevelReport {
    int level = 0;
    long long blocks = 0;
    long long txs = 0;
    long long stalled = 0;
    double mean_mining_time = 0;
    double expected_time = 0;  // final schedule
    double mean_scheduled_time = 0;  // average mean of the mining-time draws
    double mean_block_bits = 0;
    double median_inclusion_latency = 0;
    double median_root_latency = 0;
    std::int64_t reward_sat = 0;
};

struct MfnReport {
    double tx_rate = 0;
    double store_rate = 0;
    double download_rate = 0;
    double storage_mb_day = 0;
    double download_mb_day = 0;
};

struct EnergyReport {
    double kwh_per_block = 0;
    double usd_per_block = 0;
    double usd_per_mean_tx = 0;
    double rational_bound_kwh = 0;
};

struct AuditReport {
    long long conservation_checks = 0;
    long long conservation_violations = 0;
    long long full_recounts = 0;
    long long double_spend_attempts = 0;
    long long rejected_shard_mismatch = 0;
    long long rejected_double_spend = 0;
    long long rejected_multi_input = 0;
    long long rejected_bad_average = 0;
    long long double_accepts = 0;
    long long utxo_violations = 0;
    long long unreferenced_children = 0;
    long long multi_referenced_children = 0;
    long long reward_window_mismatches = 0;
    long long tree_c_eta_mismatches = 0;
    long long mempool_dropped = 0;
    long long unfunded = 0;
    long long monotonicity_violations = 0;
    long long nonce_mismatches = 0;
    long long invalid_dropped = 0;
};

struct TreeWindowCheck {
    int window = 0;
    double c_eta_inband = 0;
    double c_eta_replay = 0;
    double c_eta_batch = 0;
    double c_eta_pooled = 0;  // compute_c_eta_flat on the same window data
    bool replay_exact = false;
};

struct TreeRawRecord {
    int window = 0;
    int i = 0;
    int level = 0;
    std::uint64_t shard = 0;
    bool mined = false;
    double beta_sum = 0;
    double count = 0;
    double bits = 0;
};

struct BlockRecord {
    int level = 0;
    std::uint64_t shard = 0;
    long long seq = 0;
    double started_at = 0;
    double mined_at = 0;
    double visible_at = 0;
    std::int64_t size_bits = 0;
    long long ntx = 0;
    std::string digest;
    std::string parent;
    std::vector<std::string> children;
};

struct SimReport {
    int version = 1;
    std::string mode;
    std::uint64_t seed = 0;
    int L = 0;
    double sim_time = 0;
    long long superblocks = 0;
    long long txs_generated = 0;
    long long txs_confirmed = 0;
    double throughput = 0;
    double mean_superblock_time = 0;
    double mean_superblock_time_after_warmup = 0;
    std::vector<double> superblock_times;
    std::vector<double> boundaries;
    std::vector<WindowTrace> windows;
    std::vector<LevelReport> levels;
    MfnReport mfn;
    EnergyReport energy;
    AuditReport audits;
    std::int64_t minted_sat = 0;
    std::int64_t fees_sat = 0;
    std::vector<TreeWindowCheck> tree_checks;
    std::vector<TreeRawRecord> tree_raw;
    std::vector<BlockRecord> blocks;
    nlohmann::json config;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WindowTrace, index, end_time, superblocks, mean_superblock_time, c_eta,
                                                lambda, eta, t_hat, beta_bar, security, reward_sat)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LevelReport, level, blocks, txs, stalled, mean_mining_time,
                                                expected_time, mean_scheduled_time, mean_block_bits, median_inclusion_latency,
                                                median_root_latency, reward_sat)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MfnReport, tx_rate, store_rate, download_rate, storage_mb_day,
                                                download_mb_day)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EnergyReport, kwh_per_block, usd_per_block, usd_per_mean_tx,
                                                rational_bound_kwh)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AuditReport, conservation_checks, conservation_violations,
                                                full_recounts, double_spend_attempts, rejected_shard_mismatch,
                                                rejected_double_spend, rejected_multi_input, rejected_bad_average,
                                                double_accepts, utxo_violations, unreferenced_children,
                                                multi_referenced_children, reward_window_mismatches,
                                                tree_c_eta_mismatches, mempool_dropped, unfunded,
                                                monotonicity_violations, nonce_mismatches, invalid_dropped)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TreeWindowCheck, window, c_eta_inband, c_eta_replay, c_eta_batch,
                                                c_eta_pooled, replay_exact)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TreeRawRecord, window, i, level, shard, mined, beta_sum, count, bits)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BlockRecord, level, shard, seq, started_at, mined_at, visible_at,
                                                size_bits, ntx, digest, parent, children)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimReport, version, mode, seed, L, sim_time, superblocks,
                                                txs_generated, txs_confirmed, throughput, mean_superblock_time,
                                                mean_superblock_time_after_warmup, superblock_times, boundaries, windows, levels, mfn,
                                                energy, audits, minted_sat, fees_sat, tree_checks, tree_raw, blocks,
                                                config)

}  // namespace hbs
