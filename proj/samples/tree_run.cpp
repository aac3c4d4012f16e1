// Runs a small tree simulation with injected double spends and prints the audit.
#include "hbs/simulator.hpp"

#include <cstdio>

int main() {
    hbs::SimConfig cfg;
    cfg.mode = hbs::Mode::tree;
    cfg.L = 3;
    cfg.retarget_window = 16;
    cfg.max_superblocks = 96;
    cfg.double_spend_attempts_per_round = 4;
    cfg.seed = 5;
    const hbs::SimReport r = hbs::simulate(cfg);

    std::printf("rounds %lld, mean round time %.1f s, %lld txs confirmed\n", r.superblocks, r.mean_superblock_time,
                r.txs_confirmed);
    for (const auto& lr : r.levels)
        std::printf("level %d: %lld blocks, mean mining time %.3g s (scheduled %.3g s)\n", lr.level, lr.blocks,
                    lr.mean_mining_time, lr.expected_time);
    for (const auto& c : r.tree_checks)
        std::printf("window %d: in-band c_eta %.6g, replay %s\n", c.window, c.c_eta_inband,
                    c.replay_exact ? "exact" : "MISMATCH");
    const auto& a = r.audits;
    std::printf("double-spend attempts %lld: %lld shard mismatches, %lld double spends rejected, %lld accepted twice\n",
                a.double_spend_attempts, a.rejected_shard_mismatch, a.rejected_double_spend, a.double_accepts);
    std::printf("conservation violations %lld over %lld checks\n", a.conservation_violations, a.conservation_checks);
}
