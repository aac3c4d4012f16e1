#include "hbs/sharding.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hbs;
using hbs::test::make_tx;
using hbs::test::rel_err;

namespace {

std::string ident(std::uint64_t n) { return "peer-" + std::to_string(n); }

// Independent reading of the first `level` digest bits as a path.
std::vector<std::uint64_t> bit_walk(const Digest& d, int level) {
    std::vector<std::uint64_t> br{0};
    for (int i = 0; i < level; ++i) {
        const int bit = (d[static_cast<std::size_t>(i / 8)] >> (7 - i % 8)) & 1;
        br.push_back(2 * br.back() + static_cast<std::uint64_t>(bit));
    }
    return br;
}

}  // namespace

TEST(ShardPath, RootLevel) {
    const auto c = shard_path(0, "anything");
    EXPECT_EQ(c.index(), 0u);
    EXPECT_EQ(c.branch(), (std::vector<std::uint64_t>{0}));
}

TEST(ShardPath, BitWalkOneZeroOne) {
    std::uint64_t n = 0;
    while (!(bit_walk(sha256(ident(n)), 3) == std::vector<std::uint64_t>{0, 1, 2, 5})) ++n;
    const auto c = shard_path(3, ident(n));
    EXPECT_EQ(c.branch(), (std::vector<std::uint64_t>{0, 1, 2, 5}));
    EXPECT_EQ(c.index(), 5u);
}

TEST(ShardPath, MatchesBitWalkOracle) {
    for (std::uint64_t n = 0; n < 2000; ++n) {
        const int level = static_cast<int>(n % 40);
        EXPECT_EQ(shard_path(level, ident(n)).branch(), bit_walk(sha256(ident(n)), level));
    }
}

TEST(ShardPath, SecuredFormHashesIdentifierThenNonce) {
    const Digest nonce = sha256(std::string_view("nonce"));
    const std::string id = "peer-x";
    std::vector<std::uint8_t> buf(id.begin(), id.end());
    buf.insert(buf.end(), nonce.begin(), nonce.end());
    EXPECT_EQ(shard_path(20, id, nonce).branch(), bit_walk(sha256(buf), 20));
}

TEST(ShardPath, DigestExhausted) {
    EXPECT_THROW(shard_path(256, "x"), Error);
    EXPECT_NO_THROW(shard_path(255, "x"));
}

TEST(TxShard, LevelZeroIsRoot) {
    for (std::uint64_t n = 0; n < 50; ++n) EXPECT_EQ(tx_shard(0, make_tx(5, 5, n)).index(), 0u);
}

TEST(TxShard, PrefixAcrossLevels) {
    for (std::uint64_t n = 0; n < 200; ++n) {
        const auto t = make_tx(5, 5, n);
        const auto a = tx_shard(3, t), b = tx_shard(5, t);
        EXPECT_EQ(b.prefix(3), a);
    }
}

TEST(TxShard, UsesInputReference) {
    auto t = make_tx(5, 5, 1);
    auto u = make_tx(9, 7, 2);
    u.input_ref = t.input_ref;
    EXPECT_EQ(tx_shard(12, t), tx_shard(12, u));
}

TEST(TxShard, SharedLeadingBitsDivergeLater) {
    std::mt19937_64 rng(1);
    auto random_ref = [&] {
        auto t = make_tx(5, 5, rng());
        t.input_ref = sha256(std::to_string(rng()));
        return t;
    };
    const auto a = random_ref();
    const auto ca = tx_shard(8, a);
    for (int tries = 0; tries < 100000; ++tries) {
        const auto b = random_ref();
        const auto cb = tx_shard(8, b);
        if (cb.bits[0] == ca.bits[0] && cb.bits[1] == ca.bits[1] && cb.bits[2] != ca.bits[2]) {
            EXPECT_EQ(tx_shard(2, a), tx_shard(2, b));
            EXPECT_NE(tx_shard(3, a), tx_shard(3, b));
            return;
        }
    }
    FAIL() << "no pair found";
}

TEST(TxShard, MultiInputOnlyAtRoot) {
    auto t = make_tx(5, 5, 1);
    t.extra_inputs.push_back(counter_id(9, 9));
    EXPECT_NO_THROW(tx_shard(0, t));
    try {
        tx_shard(1, t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "E_MULTI_INPUT_SHARDED");
    }
}

namespace {

LocalRandomness random_tree(std::mt19937_64& rng, int L) {
    LocalRandomness m;
    for (int l = 0; l < L; ++l)
        for (std::uint64_t s = 0; s < (std::uint64_t{1} << l); ++s) m[{l, s}] = sha256(std::to_string(rng()));
    return m;
}

}  // namespace

TEST(GlobalNonce, SingleLevel) {
    LocalRandomness m;
    m[{0, 0}] = sha256(std::string_view("root"));
    const Digest& r = m[{0, 0}];
    EXPECT_EQ(fold_global_nonce(m, 1).value, sha256(r.data(), r.size()));
}

TEST(GlobalNonce, AnyLeafFlipChangesRoot) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int L = 2 + trial % 5;
        auto m = random_tree(rng, L);
        const Digest before = fold_global_nonce(m, L).value;
        const std::uint64_t s = rng() % (std::uint64_t{1} << (L - 1));
        m[{L - 1, s}][rng() % 32] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        EXPECT_NE(fold_global_nonce(m, L).value, before);
    }
}

TEST(GlobalNonce, BranchPathVerifies) {
    std::mt19937_64 rng(4);
    const int L = 6;
    const auto m = random_tree(rng, L);
    const auto g = fold_global_nonce(m, L);
    // recompute the root from one leaf's path: local values on the path and sibling intermediates
    const std::uint64_t leaf = 19;
    const Digest& lv = m.at({L - 1, leaf});
    Digest r = sha256(lv.data(), lv.size());
    std::uint64_t s = leaf;
    for (int l = L - 2; l >= 0; --l) {
        const std::uint64_t parent = s / 2, sib = s ^ 1u;
        const Digest& sibling = g.intermediates.at({l + 1, sib});
        const Digest& left = (s % 2 == 0) ? r : sibling;
        const Digest& right = (s % 2 == 0) ? sibling : r;
        r = sha256_concat({&m.at({l, parent}), &left, &right});
        s = parent;
    }
    EXPECT_EQ(r, g.value);
}

TEST(GlobalNonce, MissingChild) {
    std::mt19937_64 rng(5);
    auto m = random_tree(rng, 3);
    m.erase({2, 3});
    try {
        fold_global_nonce(m, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "E_MISSING_CHILD");
    }
}

TEST(MfnFraction, Values) {
    EXPECT_EQ(mfn_fraction(0), 1.0);
    EXPECT_GT(14000 * mfn_fraction(7), 100);
    EXPECT_NEAR(100 / mfn_fraction(15), 3.3e6, 0.05e6);
}

TEST(MfnRatio, Values) {
    EXPECT_NEAR(mfn_ratio(4200, 10), 0.411, 5e-4);
    EXPECT_LT(mfn_ratio(4200, 10), 1.0);
    EXPECT_NEAR(mfn_ratio(std::exp2(15) - 1, 15), 0.00732, 1e-5);
    EXPECT_DOUBLE_EQ(mfn_ratio(77, 1), 78);
}

TEST(MfnRatio, Decomposition) {
    for (int L = 1; L < 30; ++L)
        for (double N : {1.0, 100.0, 4200.0, 1e6}) {
            const double m = std::exp2(L) - 1;
            EXPECT_LE(rel_err(mfn_ratio(N, L), (N / m) * (L * L / m) + L / m), 1e-14);
        }
}

TEST(Throughput, Values) {
    EXPECT_NEAR(tree_throughput(20, 600), 1747.6, 0.1);
    EXPECT_DOUBLE_EQ(tree_throughput(1, 600), 1.0 / 600);
    for (int L = 1; L < 40; ++L) EXPECT_LT(tree_throughput(L), tree_throughput(L + 1));
}

TEST(MfnStore, Values) {
    EXPECT_NEAR(mfn_store_rate(1700, 13), 2.698, 1e-3);
    EXPECT_DOUBLE_EQ(mfn_store_rate(1700, 1), 1700);
    for (int L = 2; L < 40; ++L) EXPECT_GT(mfn_store_rate(1700, L), mfn_store_rate(1700, L + 1));
}

TEST(MfnDownload, PerDayAtThirteenLevels) {
    const double mb = per_day_mb(mfn_download_rate(100, 13), 250);
    EXPECT_NEAR(mb, 310, 1);
    EXPECT_NEAR(mb, 300, 0.15 * 300);
}

TEST(MfnDownload, UniqueInteriorMinimum) {
    for (double n : {100.0, 1700.0, 50000.0}) {
        // d rises from L=1 to L=2 for every n; the minimum lies beyond that peak.
        int sign_changes = 0, argmin = 2;
        double prev_diff = mfn_download_rate(n, 3) - mfn_download_rate(n, 2);
        for (int L = 3; L < 40; ++L) {
            const double diff = mfn_download_rate(n, L + 1) - mfn_download_rate(n, L);
            if ((diff > 0) != (prev_diff > 0)) {
                ++sign_changes;
                argmin = L;
            }
            prev_diff = diff;
        }
        EXPECT_EQ(sign_changes, 1);
        EXPECT_GT(argmin, 2);
        EXPECT_LT(argmin, 39);
    }
}

TEST(MfnDownload, ZeroRateLeavesOverhead) { EXPECT_DOUBLE_EQ(mfn_download_rate(0, 9), 9); }

TEST(OptimalLevels, SweepEndpoints) {
    const auto lo = optimal_levels(100), hi = optimal_levels(50000);
    EXPECT_NEAR(lo.L_star, 13, 0.15 * 13);
    EXPECT_NEAR(hi.L_star, 24, 0.15 * 24);
    EXPECT_NEAR(lo.storage_mb_day, 2.9, 0.15 * 2.9);
    EXPECT_NEAR(hi.storage_mb_day, 1.4, 0.15 * 1.4);
    for (double n = 100; n <= 50000; n += 100) {
        const auto o = optimal_levels(n);
        EXPECT_GE(o.download_mb_day, 270);
        EXPECT_LE(o.download_mb_day, 580);
    }
}

TEST(OptimalLevels, LocalOptimality) {
    for (double n : {100.0, 2000.0, 50000.0}) {
        const auto o = optimal_levels(n);
        const double f = mfn_download_rate(n, o.L_star);
        EXPECT_GT(mfn_download_rate(n, o.L_star - 0.01), f);
        EXPECT_GT(mfn_download_rate(n, o.L_star + 0.01), f);
        EXPECT_LE(mfn_download_rate(n, o.L_int), mfn_download_rate(n, o.L_int + 1));
        EXPECT_LE(mfn_download_rate(n, o.L_int), mfn_download_rate(n, o.L_int - 1));
    }
}

TEST(Routing, MissProbability) {
    EXPECT_EQ(routing_miss_probability(0, 5), 1.0);
    EXPECT_EQ(routing_miss_probability(3, 0), 0.0);
    EXPECT_NEAR(routing_miss_probability(2, 1), 0.25, 1e-15);
}

TEST(Routing, RequiredPeersReference) {
    EXPECT_NEAR(static_cast<double>(required_peers(1e-10, 15)), 754500, 0.005 * 754500);
    EXPECT_NEAR(static_cast<double>(required_peers(1e-10, 23)), 1.93e8, 0.005 * 1.93e8);
    EXPECT_GT(required_peers(0.1, 23), 19000000);
}

TEST(Routing, RequiredPeersIsSmallestSufficient) {
    for (int l = 1; l < 30; l += 3)
        for (double p : {0.5, 0.1, 1e-3, 1e-10}) {
            const long long n = required_peers(p, l);
            EXPECT_LE(routing_miss_probability(n, l), p);
            EXPECT_GT(routing_miss_probability(n - 1, l), p);
        }
}

TEST(ShardingProperties, NonceChangesShard) {
    std::mt19937_64 rng(6);
    const std::string id = "fixed-peer";
    const auto base = shard_path(8, id, sha256(std::string_view("n0")));
    int changed = 0;
    const int trials = 20000;
    for (int k = 0; k < trials; ++k)
        if (shard_path(8, id, sha256(std::to_string(rng()))) != base) ++changed;
    const double p = 1 - 1.0 / 256, frac = static_cast<double>(changed) / trials;
    EXPECT_NEAR(frac, p, 5 * std::sqrt(p * (1 - p) / trials));
}

TEST(ShardCoord, AtAndIndexRoundTrip) {
    for (int l = 0; l < 20; ++l)
        for (std::uint64_t s : {0ull, 1ull, 5ull, 1000ull})
            if (s < (1ull << l)) EXPECT_EQ(ShardCoord::at(l, s).index(), s);
}
