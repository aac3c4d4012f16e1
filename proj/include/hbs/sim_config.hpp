#pragma once

#include "hbs/core_model.hpp"
#include "hbs/economics.hpp"
#include "hbs/workload.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace hbs {

enum class Mode { flat, hybrid, tree, concurrent };
enum class Broadcast { per_subblock, whole_multiblock, hybrid_batch };
enum class DifficultyBasis { schedule, content };

NLOHMANN_JSON_SERIALIZE_ENUM(Mode, {{Mode::flat, "flat"}, {Mode::hybrid, "hybrid"}, {Mode::tree, "tree"},
                                    {Mode::concurrent, "concurrent"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Broadcast, {{Broadcast::per_subblock, "per-subblock"},
                                         {Broadcast::whole_multiblock, "whole-multiblock"},
                                         {Broadcast::hybrid_batch, "hybrid-batch"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DifficultyBasis, {{DifficultyBasis::schedule, "schedule"},
                                               {DifficultyBasis::content, "content"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SizeKind, {{SizeKind::fixed, "fixed"}, {SizeKind::empirical, "empirical"},
                                        {SizeKind::lognormal, "lognormal"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MixtureComponent, weight, mu, sigma, size_bytes)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WorkloadSpec, rate, mu, sigma, size_kind, size_fixed, size_empirical,
                                                size_ln_mu, size_ln_sigma, mixture, level_override_fraction,
                                                override_level)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EnergyParams, efficiency, electricity_price, btcusd, fee_per_bit_usd,
                                                block_reward)

struct MinerSpec {
    std::string peer_id;
    double hashrate = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MinerSpec, peer_id, hashrate)

struct SimConfig {
    Mode mode = Mode::flat;
    int L = 3;
    int children_per_node = 2;
    int retarget_window = 32;
    double target_time = kTargetTime;
    WorkloadSpec workload;
    double total_hashrate = 1.2e20;  // H/s, split evenly over generated miners
    int num_miners = 64;
    std::vector<MinerSpec> miners;   // explicit roster; overrides num_miners when non-empty
    double propagation_ms_per_byte = 1.0;
    double propagation_floor_s = 0.0;
    Broadcast broadcast = Broadcast::per_subblock;
    DifficultyBasis difficulty_basis = DifficultyBasis::schedule;
    std::uint64_t seed = 1;
    double duration = 0;          // seconds of simulated time; 0 means use max_superblocks
    long long max_superblocks = 320;
    std::int64_t max_block_bits = 8LL * 1024 * 1024;
    double block_reward = 6.25;   // BTC per super-block (or per root block)
    double ref_fee_sat_per_bit = 1.0;  // level-0 fee rate; lower levels scale with eta
    int bootstrap_txs = 4000;
    int genesis_outputs = 4096;
    std::int64_t genesis_value = 100000000000000LL;  // 1e6 BTC per output
    std::size_t mempool_cap_per_level = 200000;
    double t_min = 15.0;
    int max_batch = 0;            // concurrent mode, 0 = unlimited child refs per block
    int double_spend_attempts_per_round = 0;
    bool record_blocks = false;
    bool record_tree_raw = true;
    EnergyParams energy;

    void validate() const {
        if (L < 1 || L > 24) throw Error("E_CONFIG", "levels must be in [1, 24]");
        if (mode == Mode::hybrid && L < 2) throw Error("E_CONFIG", "hybrid mode needs at least 2 levels");
        if (children_per_node != 2) throw Error("E_CONFIG", "only binary trees (children_per_node = 2) are simulated");
        if (retarget_window < 1) throw Error("E_CONFIG", "retarget_window must be >= 1");
        if (!(target_time > 0)) throw Error("E_CONFIG", "target_time must be > 0");
        if (!(total_hashrate > 0)) throw Error("E_CONFIG", "total_hashrate must be > 0");
        if (miners.empty() && num_miners < 1) throw Error("E_CONFIG", "need at least one miner");
        for (const auto& m : miners)
            if (!(m.hashrate > 0)) throw Error("E_CONFIG", "miner hashrate must be > 0");
        if (propagation_ms_per_byte < 0 || propagation_floor_s < 0) throw Error("E_CONFIG", "propagation must be >= 0");
        if (duration < 0) throw Error("E_CONFIG", "duration must be >= 0");
        if (duration == 0 && max_superblocks < 1) throw Error("E_CONFIG", "need duration or max_superblocks");
        if (max_block_bits < 8 * kHeaderBytes) throw Error("E_CONFIG", "max_block_bits below header size");
        if (block_reward < 0) throw Error("E_CONFIG", "block_reward must be >= 0");
        if (bootstrap_txs < 2) throw Error("E_CONFIG", "bootstrap_txs must be >= 2");
        if (genesis_outputs < 1 || genesis_value < 1) throw Error("E_CONFIG", "genesis outputs must be positive");
        if (max_batch < 0 || double_spend_attempts_per_round < 0) throw Error("E_CONFIG", "negative count");
        workload.validate();
    }
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimConfig, mode, L, children_per_node, retarget_window, target_time,
                                                workload, total_hashrate, num_miners, miners, propagation_ms_per_byte,
                                                propagation_floor_s, broadcast, difficulty_basis, seed, duration,
                                                max_superblocks, max_block_bits, block_reward, ref_fee_sat_per_bit,
                                                bootstrap_txs, genesis_outputs, genesis_value, mempool_cap_per_level,
                                                t_min, max_batch, double_spend_attempts_per_round, record_blocks,
                                                record_tree_raw, energy)

}  // namespace hbs
