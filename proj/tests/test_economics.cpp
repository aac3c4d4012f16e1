#include "hbs/data_io.hpp"
#include "hbs/economics.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace hbs;
using hbs::test::make_tx;
using hbs::test::matches_two_sig_figs;
using hbs::test::rel_err;

namespace {

const std::vector<double> kReferenceMeanBeta{3.6e8, 2.3e6, 6.3e4, 1.3e3, 4.5e1, 0.73};
const std::vector<double> kReferenceEta{0.13, 8.2e-4, 2.3e-5, 4.7e-7, 1.6e-8, 2.6e-10};
const std::vector<double> kReferenceTimes{429, 124, 44.5, 2.85, 0.0247, 5.89e-6};

LevelStats stats_from(const std::vector<double>& mean_beta, const std::vector<double>& bits = {}) {
    LevelStats st;
    for (std::size_t l = 0; l < mean_beta.size(); ++l) {
        LevelStat s;
        s.count = 1;
        s.mean_beta = mean_beta[l];
        s.total_bits = bits.empty() ? 0 : bits[l];
        st.levels.push_back(s);
    }
    return st;
}

LevelStats synthetic_stats(std::uint64_t seed, int L, std::size_t n) {
    std::mt19937_64 rng(seed);
    WorkloadSpec w;
    w.size_kind = SizeKind::lognormal;
    std::vector<ExtendedTransaction> txs;
    for (const auto& r : generate_rows(w, rng, n, 500)) txs.push_back(row_to_tx(r));
    return level_stats(segment(L, txs));
}

}  // namespace

TEST(CEta, SingleLevelClosedForm) {
    std::vector<ExtendedTransaction> txs;
    for (std::uint64_t n = 0; n < 40; ++n) txs.push_back(make_tx(80000, 250, n));
    const auto st = level_stats(segment(1, txs));
    const double beta = 80000.0 / 2000.0;
    const double bits_per_block = 40 * 2000.0 / 4;
    EXPECT_LE(rel_err(compute_c_eta_flat(st, 4, 600), 600 * 1e8 / (beta * bits_per_block)), 1e-15);
}

TEST(CEta, AllEmptyIsAnError) {
    LevelStats st;
    st.levels.resize(3);
    try {
        compute_c_eta_flat(st, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "E_EMPTY");
    }
}

TEST(CEta, TotalValueEstimatorIsCloseOnNarrowLevels) {
    // beta_bar * b_bar approximates v_bar when beta varies little within a level
    const auto st = synthetic_stats(12, 12, 50000);
    const double a = compute_c_eta_flat(st, 100), b = compute_c_eta_total_value(st, 100);
    EXPECT_LT(rel_err(b, a), 0.15);
}

TEST(CEta, CalibrationClosure) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto st = synthetic_stats(seed, 4, 8000);
        const long long nb = 16;
        const double c = compute_c_eta_flat(st, nb);
        const auto t = time_per_level(eta_levels_flat(c, st), avg_block_bits(st, nb));
        EXPECT_LE(rel_err(std::accumulate(t.begin(), t.end(), 0.0), 600.0), 1e-9);
    }
}

TEST(EtaFlat, ReferenceVectorFromMeanBeta) {
    const auto eta = eta_levels_flat(0.036, stats_from(kReferenceMeanBeta));
    ASSERT_EQ(eta.size(), 6u);
    for (std::size_t l = 0; l < 6; ++l) EXPECT_TRUE(matches_two_sig_figs(eta[l], kReferenceEta[l])) << "level " << l;
}

TEST(EtaFlat, TwoLevelReferenceRows) {
    // both printed etas imply the same c_eta up to the rounding of the beta row
    const std::vector<double> beta{1.2e6, 1.07e3};
    const double c0 = 0.000281 / beta[0] * 1e8, c1 = 2.52e-7 / beta[1] * 1e8;
    EXPECT_LT(rel_err(c0, c1), 0.01);
    const auto eta = eta_levels_flat(c0, stats_from(beta));
    EXPECT_DOUBLE_EQ(eta[0], 0.000281);
    EXPECT_LT(rel_err(eta[1], 2.52e-7), 0.01);
}

TEST(EtaFlat, ConstantBetaViolatesMonotonicity) {
    const auto eta = eta_levels_flat(0.05, stats_from({10, 10, 10}));
    EXPECT_EQ(eta[0], eta[1]);
    EXPECT_FALSE(strictly_decreasing(eta));
}

TEST(EtaFlat, EmptyLevelCarriesPrevious) {
    auto st = stats_from({100, 10, 1});
    st.levels[1] = LevelStat{};
    const auto eta = eta_levels_flat(0.05, st, {9, 8, 7});
    EXPECT_EQ(eta[1], 8);
    EXPECT_DOUBLE_EQ(eta[0], 0.05 * 100 / 1e8);
}

TEST(EtaFlat, DecreasingWheneverBetaDecreases) {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 200; ++k) {
        const auto st = synthetic_stats(rng(), 5, 2000);
        std::vector<double> beta;
        for (const auto& s : st.levels)
            if (s.present()) beta.push_back(s.mean_beta);
        const auto eta = eta_levels_flat(0.03, stats_from(beta));
        EXPECT_TRUE(strictly_decreasing(eta));
    }
}

TEST(TimePerLevel, ElementwiseProduct) {
    EXPECT_EQ(time_per_level({2, 3}, {10, 0}), (std::vector<double>{20, 0}));
    EXPECT_THROW(time_per_level({1}, {1, 2}), Error);
}

TEST(TimePerLevel, TwoLevelReferenceFromBlockBits) {
    // 598 s and 1.92 s at the printed etas imply these average block sizes
    const std::vector<double> bits{598 / 0.000281, 1.92 / 2.52e-7};
    const auto t = time_per_level({0.000281, 2.52e-7}, bits);
    EXPECT_NEAR(t[0], 598, 1e-9);
    EXPECT_NEAR(t[1], 1.92, 1e-12);
}

TEST(MinLevelTime, ReferenceTimes) {
    const auto chk = check_min_level_time(kReferenceTimes, 15);
    EXPECT_FALSE(chk.ok);
    EXPECT_EQ(chk.recommended_L, 3);
    EXPECT_TRUE(check_min_level_time(kReferenceTimes, 0).ok);
    const auto strict = check_min_level_time(kReferenceTimes, 1000);
    EXPECT_FALSE(strict.ok);
    EXPECT_EQ(strict.recommended_L, 0);
}

TEST(MinLevelTime, FromSchedule) {
    LevelSchedule s;
    s.expected_block_time = {500, 80, 20};
    EXPECT_TRUE(check_min_level_time(s).ok);
}

TEST(Fees, ReferenceRatios) {
    const auto f = fee_rates(kReferenceEta, 1.0);
    EXPECT_NEAR(f[0] / f[1], 159, 1);
    EXPECT_NEAR(f[0] / f[2], 5650, 10);
    EXPECT_EQ(f, kReferenceEta);
}

TEST(Fees, RatiosIndependentOfKappa) {
    const auto a = fee_rates(kReferenceEta, 1.0), b = fee_rates(kReferenceEta, 37.5);
    for (std::size_t l = 1; l < a.size(); ++l) EXPECT_LE(rel_err(a[0] / a[l], b[0] / b[l]), 1e-14);
    EXPECT_THROW(fee_rates(kReferenceEta, 0), Error);
}

TEST(Fees, TreeRatiosMatchFlatPerShardFees) {
    // a level-l tx pays eta_tree / 2^l per bit since 2^l shards split the level
    const auto st = stats_from(kReferenceMeanBeta);
    const auto flat = eta_levels_flat(0.036, st), tree = eta_levels_tree(0.036, st);
    for (std::size_t l = 0; l < flat.size(); ++l) EXPECT_LE(rel_err(tree[l] / std::ldexp(1.0, static_cast<int>(l)), flat[l]), 1e-15);
}

TEST(RewardsFlat, ReferenceTimes) {
    const auto r = reward_split_flat(kReferenceTimes, 6.25);
    const double sum_t = std::accumulate(kReferenceTimes.begin(), kReferenceTimes.end(), 0.0);
    EXPECT_NEAR(sum_t, 600.37, 0.01);
    EXPECT_NEAR(r[0], 429 / sum_t * 6.25, 1e-8);
    EXPECT_NEAR(r[0], 4.466, 1e-3);
}

TEST(RewardsFlat, SingleLevelGetsAll) { EXPECT_EQ(reward_split_flat({17}, 6.25), (std::vector<double>{6.25})); }

TEST(RewardsFlat, ConservedInSatoshi) {
    const auto sat = reward_split_flat_sat(kReferenceTimes, 625000000);
    EXPECT_EQ(std::accumulate(sat.begin(), sat.end(), std::int64_t{0}), 625000000);
}

TEST(RewardsFlat, AllZeroIsAnError) {
    try {
        reward_split_flat({0, 0}, 6.25);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "E_ZERO_TIMES");
    }
}

TEST(RewardsTree, OneLevelIsFlat) {
    const auto r = reward_split_tree({600}, 1, 6.25);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0], (std::vector<double>{6.25}));
}

TEST(RewardsTree, ShardShareIsLevelShareOverShards) {
    const auto tree = reward_split_tree(kReferenceTimes, 6, 6.25);
    const double sum_t = std::accumulate(kReferenceTimes.begin(), kReferenceTimes.end(), 0.0);
    ASSERT_EQ(tree[2].size(), 4u);
    EXPECT_LE(rel_err(tree[2][3], kReferenceTimes[2] / sum_t * 6.25 / 4), 1e-15);
}

TEST(RewardsTree, Conserved) {
    const auto tree = reward_split_tree(kReferenceTimes, 6, 6.25);
    double s = 0;
    for (const auto& row : tree)
        for (double x : row) s += x;
    EXPECT_NEAR(s, 6.25, 1e-12);
    const auto sat = reward_split_tree_sat(kReferenceTimes, 6, 625000000);
    std::int64_t ss = 0;
    for (const auto& row : sat)
        for (auto x : row) ss += x;
    EXPECT_EQ(ss, 625000000);
}

TEST(EtaTree, ReferenceLevelTwo) {
    // Mean beta chosen so the flat level-2 value is exactly the printed 2.3e-5.
    const auto eta = eta_levels_tree(0.036, stats_from({3.6e8, 2.3e6, 2.3e-5 * 1e8 / 0.036}));
    EXPECT_NEAR(eta[2], 9.2e-5, 1e-18);
    const auto from_table = eta_levels_tree(0.036, stats_from(kReferenceMeanBeta));
    EXPECT_NEAR(from_table[2], 4 * 0.036 * 6.3e4 / 1e8, 1e-18);
    EXPECT_EQ(from_table[0], eta_levels_flat(0.036, stats_from(kReferenceMeanBeta))[0]);
}

TEST(EtaTree, WiderTreesScaleByPower) {
    const auto st = stats_from({100, 10, 1});
    const auto flat = eta_levels_flat(0.02, st), tree = eta_levels_tree(0.02, st, 4);
    EXPECT_LE(rel_err(tree[2], 16 * flat[2]), 1e-15);
    EXPECT_THROW(eta_levels_tree(0.02, st, 1), Error);
}

TEST(EtaTree, PerShardTimeEqualsFlatTime) {
    const auto st = synthetic_stats(21, 5, 20000);
    const long long nb = 40;
    const double c = compute_c_eta_flat(st, nb);
    const auto bits = avg_block_bits(st, nb);
    std::vector<double> shard_bits(bits.size());
    for (std::size_t l = 0; l < bits.size(); ++l) shard_bits[l] = bits[l] / std::ldexp(1.0, static_cast<int>(l));
    const auto flat = time_per_level(eta_levels_flat(c, st), bits);
    const auto tree = time_per_level(eta_levels_tree(c, st), shard_bits);
    for (std::size_t l = 0; l < flat.size(); ++l) EXPECT_LE(rel_err(tree[l], flat[l]), 1e-14);
}

TEST(SecurityEqualization, FlatAndTree) {
    const auto st = synthetic_stats(33, 6, 20000);
    const double hB = 1.2e20, c = compute_c_eta_flat(st, 30);
    const auto flat = eta_levels_flat(c, st), tree = eta_levels_tree(c, st);
    const double ref = hB * flat[0] / st.levels[0].mean_beta;
    for (std::size_t l = 0; l < flat.size(); ++l) {
        if (!st.levels[l].present()) continue;
        const double hl = hB / std::ldexp(1.0, static_cast<int>(l));
        EXPECT_LE(rel_err(hB * flat[l] / st.levels[l].mean_beta, ref), 1e-12);
        EXPECT_LE(rel_err(hl * tree[l] / st.levels[l].mean_beta, ref), 1e-12);
    }
}

TEST(RecurrentAverage, FirstSampleWipesInit) { EXPECT_EQ(recurrent_average(1e9, 0, 3.5), 3.5); }

TEST(RecurrentAverage, ConstantSequence) {
    double v = -4;
    for (int i = 0; i < 100; ++i) {
        v = recurrent_average(v, i, 2.25);
        EXPECT_DOUBLE_EQ(v, 2.25);
    }
}

TEST(RecurrentAverage, MatchesBatchMeanOverWindow) {
    std::mt19937_64 rng(13);
    std::lognormal_distribution<double> d(0, 2);
    double v = 0, sum = 0;
    for (int i = 0; i < 2016; ++i) {
        const double x = d(rng);
        sum += x;
        v = recurrent_average(v, i, x);
    }
    EXPECT_LE(rel_err(v, sum / 2016), 1e-10);
}

TEST(Homotopy, ReferenceLambda) { EXPECT_NEAR(homotopy_lambda(1.92, 600), 0.0032, 1e-12); }

TEST(Homotopy, FloorAndUpperEnd) {
    EXPECT_DOUBLE_EQ(homotopy_lambda(0, 600), 0.08 / 600);
    EXPECT_EQ(homotopy_lambda(600, 600), 1.0);
    EXPECT_THROW(homotopy_lambda(600.5, 600), Error);
}

TEST(Energy, ReferenceTransactionAndBlockCost) {
    EnergyParams ep;
    NetworkParams net;
    net.total_hashrate = 1.2e8 * 1e12;
    EXPECT_NEAR(energy_per_tx(ep, net, 250).usd, 14.30, 0.05);
    EXPECT_NEAR(energy_per_tx(ep, net, 1024 * 1024).usd, 60000, 600);
    EXPECT_EQ(energy_per_tx(ep, net, 0).kwh, 0);
}

TEST(Energy, LinearInEachFactor) {
    EnergyParams ep;
    NetworkParams net;
    net.total_hashrate = 1e20;
    const double base = energy_per_tx(ep, net, 300).kwh;
    auto ep2 = ep;
    ep2.efficiency *= 3;
    EXPECT_LE(rel_err(energy_per_tx(ep2, net, 300).kwh, 3 * base), 1e-14);
    auto net2 = net;
    net2.total_hashrate *= 5;
    EXPECT_LE(rel_err(energy_per_tx(ep, net2, 300).kwh, 5 * base), 1e-14);
    EXPECT_LE(rel_err(energy_per_tx(ep, net, 900).kwh, 3 * base), 1e-14);
}

TEST(Energy, RationalMinerBound) {
    EnergyParams ep;
    const double e = energy_upper_bound(ep);
    EXPECT_LT(rel_err(e, 2.66e6), 0.01);
    EXPECT_LT(rel_err(annualize_per_block(e) / 1e9, 140), 0.02);
    ep.fee_per_bit_usd = 0;
    ep.block_reward = 0;
    EXPECT_EQ(energy_upper_bound(ep), 0);
}

TEST(Schedule, BuildIsConsistent) {
    const auto st = synthetic_stats(44, 4, 10000);
    const auto s = build_schedule(st, 20);
    EXPECT_EQ(s.L, 4);
    EXPECT_NEAR(std::accumulate(s.reward_share.begin(), s.reward_share.end(), 0.0), 1.0, 1e-12);
    EXPECT_TRUE(strictly_decreasing(s.eta));
    EXPECT_LE(rel_err(std::accumulate(s.expected_block_time.begin(), s.expected_block_time.end(), 0.0), 600), 1e-9);
}
