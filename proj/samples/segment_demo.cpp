// Segments a synthetic transaction sample and prints the calibrated schedule.
#include "hbs/data_io.hpp"
#include "hbs/economics.hpp"
#include "hbs/segmentation.hpp"

#include <cstdio>
#include <random>

int main() {
    hbs::WorkloadSpec w;
    w.mu = 3.0;
    w.sigma = 1.2;
    std::mt19937_64 rng(42);
    const auto rows = hbs::generate_rows(w, rng, 50000, 2000);
    std::vector<hbs::ExtendedTransaction> txs;
    for (const auto& r : rows) txs.push_back(hbs::row_to_tx(r));

    const int L = 4;
    const long long blocks = static_cast<long long>(rows.back().block_height) + 1;
    const hbs::LevelStats st = hbs::level_stats(hbs::segment(L, txs));
    const hbs::LevelSchedule sched = hbs::build_schedule(st, blocks);

    std::printf("c_eta = %.4g s/BTC over %lld blocks\n", hbs::compute_c_eta_flat(st, blocks), blocks);
    std::printf("%3s %8s %12s %12s %10s %10s\n", "l", "count", "mean beta", "eta [s/b]", "t [s]", "reward");
    const auto reward = hbs::reward_split_flat(sched.expected_block_time, 6.25);
    for (int l = 0; l < L; ++l) {
        const auto& s = st.levels[static_cast<std::size_t>(l)];
        std::printf("%3d %8zu %12.4g %12.4g %10.4g %10.6f\n", l, s.count, s.mean_beta, sched.eta[l],
                    sched.expected_block_time[l], reward[l]);
    }
    const hbs::MinLevelCheck chk = hbs::check_min_level_time(sched);
    std::printf("last level above 15 s: %s (largest passing L = %d)\n", chk.ok ? "yes" : "no", chk.recommended_L);
}
