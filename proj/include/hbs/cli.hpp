#pragma once

#include "hbs/data_io.hpp"
#include "hbs/economics.hpp"
#include "hbs/segmentation.hpp"
#include "hbs/sharding.hpp"
#include "hbs/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hbs::cli {

enum class Format { table, delimited };

// Row-labelled table: one row per quantity, one column per level (or item).
struct Table {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::pair<std::string, std::vector<double>>> rows;
};

inline std::string short_num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

inline void emit(std::ostream& out, const Table& t, Format f) {
    if (f == Format::delimited) {
        out << "# " << t.title << '\n' << "quantity";
        for (const auto& c : t.columns) out << ',' << c;
        out << '\n';
        for (const auto& [label, vals] : t.rows) {
            out << label;
            for (double v : vals) out << ',' << format_number(v);
            out << '\n';
        }
        return;
    }
    std::size_t w0 = 8;
    for (const auto& r : t.rows) w0 = std::max(w0, r.first.size());
    out << t.title << '\n';
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w0), "");
    out << buf;
    for (const auto& c : t.columns) {
        std::snprintf(buf, sizeof buf, " | %10s", c.c_str());
        out << buf;
    }
    out << '\n';
    for (const auto& [label, vals] : t.rows) {
        std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w0), label.c_str());
        out << buf;
        for (double v : vals) {
            std::snprintf(buf, sizeof buf, " | %10s", short_num(v).c_str());
            out << buf;
        }
        out << '\n';
    }
}

inline void emit_scalar(std::ostream& out, const std::string& name, double v, Format f) {
    if (f == Format::delimited)
        out << name << ',' << format_number(v) << '\n';
    else
        out << name << " = " << short_num(v) << '\n';
}

inline std::vector<std::string> level_columns(int L) {
    std::vector<std::string> c;
    for (int l = 0; l < L; ++l) c.push_back("l=" + std::to_string(l));
    return c;
}

inline Table segmentation_table(const LevelStats& st) {
    Table t;
    t.title = "Segmentation by value per bit";
    t.columns = level_columns(st.L());
    std::vector<double> cnt, mnb, mxb, mb, mnv, mxv, mv, sv, ms, tb;
    for (const auto& s : st.levels) {
        cnt.push_back(static_cast<double>(s.count));
        mnb.push_back(s.present() ? s.min_beta : 0);
        mxb.push_back(s.present() ? s.max_beta : 0);
        mb.push_back(s.present() ? s.mean_beta : 0);
        mnv.push_back(s.present() ? s.min_value : 0);
        mxv.push_back(s.present() ? s.max_value : 0);
        mv.push_back(s.present() ? s.mean_value : 0);
        sv.push_back(s.total_value);
        ms.push_back(s.present() ? s.mean_size_bytes : 0);
        tb.push_back(s.total_bits);
    }
    t.rows = {{"|T_l|", cnt},          {"min(beta)", mnb}, {"max(beta)", mxb}, {"mean(beta)", mb},
              {"min(v)", mnv},         {"max(v)", mxv},    {"mean(v)", mv},    {"sum(v)", sv},
              {"mean size [B]", ms},   {"total bits", tb}};
    return t;
}

struct Globals {
    std::uint64_t seed = 1;
    std::string config;
    std::string out_dir;
    std::string format = "table";
};

inline std::vector<double> parse_list(const std::string& s, const std::string& flag) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            v.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error("E_FLAG", flag + ": expected a comma-separated list of numbers, got '" + s + "'");
        }
    }
    return v;
}

inline std::string out_path(const Globals& g, const std::string& name) {
    std::string dir = g.out_dir;
    if (dir.empty()) {
        const char* env = std::getenv("HBS_OUT_DIR");
        dir = env ? env : ".";
    }
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

inline std::vector<ExtendedTransaction> synthetic_txs(std::uint64_t seed, std::size_t n, double mu, double sigma) {
    WorkloadSpec w;
    w.mu = mu;
    w.sigma = sigma;
    std::mt19937_64 rng(seed);
    std::vector<ExtendedTransaction> out;
    for (const auto& r : generate_rows(w, rng, n, 2000)) out.push_back(row_to_tx(r));
    return out;
}

// Builds the parser. Exposed so tests can enumerate every option.
struct Parser {
    CLI::App app{"Hierarchical block structure toolkit: analysis and simulation", "hbs"};
    Globals g;

    // segment
    std::string seg_dataset, seg_mode = "uniform";
    int seg_levels = 6;
    std::size_t seg_synthetic = 20000;
    double seg_mu = 3.0, seg_sigma = 1.0;
    bool seg_fig5 = false;
    int seg_bins = 100;

    // estimate
    std::string est_dataset, est_beta_bar, est_bits, est_times, est_mode = "uniform";
    int est_levels = 6;
    long long est_blocks = 0;
    double est_c_eta = 0, est_target = kTargetTime, est_kappa = 1.0, est_reward = 6.25, est_t_min = 15.0;
    bool est_tree = false;

    // shardcalc
    double sc_N = 4200, sc_rate = 0, sc_p = 1e-10, sc_target = kTargetTime, sc_tx_bytes = 250;
    int sc_levels = 10;
    bool sc_routing = false, sc_optimal = false, sc_fig6 = false, sc_fig7 = false, sc_fig8 = false;

    // energy
    double en_eff = 30, en_hash_th = 1.2e8, en_price = 0.1, en_btcusd = 40000, en_phi = 0.001875, en_reward = 6.25;
    long long en_size = 250;

    // simulate
    std::string sim_mode = "flat", sim_broadcast = "per-subblock", sim_basis = "schedule", sim_report = "report.json";
    int sim_levels = 3, sim_window = 32, sim_runs = 1, sim_miners = 64, sim_ds = 0, sim_max_batch = 0;
    long long sim_superblocks = 320;
    double sim_duration = 0, sim_rate = 0.2, sim_mu = 3.0, sim_sigma = 1.0, sim_ms_per_byte = 1.0;
    bool sim_record_blocks = false;

    // gen
    std::string gen_out = "dataset.csv";
    std::size_t gen_n = 10000, gen_per_block = 2000;
    double gen_mu = 3.0, gen_sigma = 1.0, gen_size = 250;

    CLI::App *segment, *estimate, *shardcalc, *energy, *simulate, *gen;

    Parser() {
        app.require_subcommand(1);
        app.add_option("--seed", g.seed, "RNG seed for stochastic subcommands")->capture_default_str();
        app.add_option("--config", g.config, "JSON file with simulator settings (simulate, gen)");
        app.add_option("--out-dir", g.out_dir, "Directory for output files (default: $HBS_OUT_DIR or .)");
        app.add_option("--format", g.format, "Output format")
            ->check(CLI::IsMember({"table", "delimited"}))
            ->capture_default_str();

        segment = app.add_subcommand("segment", "Segment transactions into levels by value per bit");
        segment->add_option("--dataset", seg_dataset, "CSV with block_height,txid,size,output_value");
        segment->add_option("--levels", seg_levels, "Number of levels L")->check(CLI::Range(1, 64))->capture_default_str();
        segment->add_option("--range", seg_mode, "Step rule")->check(CLI::IsMember({"uniform", "rounded"}))->capture_default_str();
        segment->add_option("--synthetic", seg_synthetic, "Synthetic sample size when no dataset is given")->capture_default_str();
        segment->add_option("--mu", seg_mu, "Synthetic mean of lg(beta)")->capture_default_str();
        segment->add_option("--sigma", seg_sigma, "Synthetic std of lg(beta)")->check(CLI::NonNegativeNumber)->capture_default_str();
        segment->add_flag("--fig5", seg_fig5, "Write fig5.csv (histogram of lg(beta) and fitted density)");
        segment->add_option("--bins", seg_bins, "Histogram bins")->check(CLI::Range(1, 100000))->capture_default_str();

        estimate = app.add_subcommand("estimate", "Calibrate c_eta, time investments, block times, fees, rewards");
        estimate->add_option("--dataset", est_dataset, "CSV dataset to segment and calibrate on");
        estimate->add_option("--levels", est_levels, "Number of levels L")->check(CLI::Range(1, 64))->capture_default_str();
        estimate->add_option("--range", est_mode, "Step rule")->check(CLI::IsMember({"uniform", "rounded"}))->capture_default_str();
        estimate->add_option("--num-blocks", est_blocks, "Blocks in the window (default: distinct heights)");
        estimate->add_option("--beta-bar", est_beta_bar, "Per-level mean beta in sat/bit, comma separated");
        estimate->add_option("--bits", est_bits, "Per-level average block bits, comma separated");
        estimate->add_option("--c-eta", est_c_eta, "Use this c_eta [s/BTC] instead of estimating it")->check(CLI::PositiveNumber);
        estimate->add_option("--times", est_times, "Per-level block times [s]; reports lambda and reward split");
        estimate->add_option("--target", est_target, "Target super-block time [s]")->check(CLI::PositiveNumber)->capture_default_str();
        estimate->add_option("--kappa", est_kappa, "Fee proportionality constant")->check(CLI::PositiveNumber)->capture_default_str();
        estimate->add_option("--reward", est_reward, "Block reward [BTC]")->check(CLI::NonNegativeNumber)->capture_default_str();
        estimate->add_option("--t-min", est_t_min, "Minimal last-level block time [s]")->check(CLI::NonNegativeNumber)->capture_default_str();
        estimate->add_flag("--tree", est_tree, "Also print tree time investments");

        shardcalc = app.add_subcommand("shardcalc", "Sharding closed forms: MFN ratio, throughput, storage, routing");
        shardcalc->add_option("--N", sc_N, "Transactions per block for r(N,L)")->check(CLI::PositiveNumber)->capture_default_str();
        shardcalc->add_option("--levels", sc_levels, "Number of levels L")->check(CLI::Range(1, 63))->capture_default_str();
        shardcalc->add_option("--rate", sc_rate, "Transaction rate n [tx/s] for MFN storage and download")->check(CLI::NonNegativeNumber);
        shardcalc->add_option("--tx-bytes", sc_tx_bytes, "Bytes per transaction for MB/day")->check(CLI::PositiveNumber)->capture_default_str();
        shardcalc->add_option("--target", sc_target, "Target block time [s]")->check(CLI::PositiveNumber)->capture_default_str();
        shardcalc->add_flag("--routing", sc_routing, "Print required peers for the deepest level");
        shardcalc->add_option("--p", sc_p, "Routing miss probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
        shardcalc->add_flag("--optimal", sc_optimal, "Print the download-minimizing L for --rate");
        shardcalc->add_flag("--fig6", sc_fig6, "Write fig6.csv");
        shardcalc->add_flag("--fig7", sc_fig7, "Write fig7.csv");
        shardcalc->add_flag("--fig8", sc_fig8, "Write fig8.csv");

        energy = app.add_subcommand("energy", "Energy per transaction and rational-miner bound");
        energy->add_option("--efficiency", en_eff, "Miner efficiency [J/TH]")->check(CLI::PositiveNumber)->capture_default_str();
        energy->add_option("--hashrate-th", en_hash_th, "Network hashrate [TH/s]")->check(CLI::PositiveNumber)->capture_default_str();
        energy->add_option("--price", en_price, "Electricity price [$/kWh]")->check(CLI::PositiveNumber)->capture_default_str();
        energy->add_option("--size", en_size, "Transaction size [B]")->check(CLI::NonNegativeNumber)->capture_default_str();
        energy->add_option("--btcusd", en_btcusd, "BTC price [$]")->check(CLI::NonNegativeNumber)->capture_default_str();
        energy->add_option("--phi", en_phi, "Fee per bit [$/b]")->check(CLI::NonNegativeNumber)->capture_default_str();
        energy->add_option("--reward", en_reward, "Block reward [BTC]")->check(CLI::NonNegativeNumber)->capture_default_str();

        simulate = app.add_subcommand("simulate", "Run the discrete-event simulator and write a JSON report");
        simulate->add_option("--mode", sim_mode, "Chain mode")
            ->check(CLI::IsMember({"flat", "hybrid", "tree", "concurrent"}))->capture_default_str();
        simulate->add_option("--levels", sim_levels, "Number of levels L")->check(CLI::Range(1, 24))->capture_default_str();
        simulate->add_option("--window", sim_window, "Retarget window [super-blocks]")->check(CLI::PositiveNumber)->capture_default_str();
        simulate->add_option("--superblocks", sim_superblocks, "Stop after this many super-blocks (root blocks)")->check(CLI::PositiveNumber)->capture_default_str();
        simulate->add_option("--duration", sim_duration, "Stop after this much simulated time [s]; overrides --superblocks")->check(CLI::NonNegativeNumber);
        simulate->add_option("--rate", sim_rate, "Transaction arrival rate [tx/s]")->check(CLI::PositiveNumber)->capture_default_str();
        simulate->add_option("--mu", sim_mu, "Mean of lg(beta)")->capture_default_str();
        simulate->add_option("--sigma", sim_sigma, "Std of lg(beta)")->check(CLI::NonNegativeNumber)->capture_default_str();
        simulate->add_option("--miners", sim_miners, "Number of equal miners")->check(CLI::PositiveNumber)->capture_default_str();
        simulate->add_option("--broadcast", sim_broadcast, "Broadcast policy")
            ->check(CLI::IsMember({"per-subblock", "whole-multiblock", "hybrid-batch"}))->capture_default_str();
        simulate->add_option("--basis", sim_basis, "Mining-time basis")
            ->check(CLI::IsMember({"schedule", "content"}))->capture_default_str();
        simulate->add_option("--ms-per-byte", sim_ms_per_byte, "Propagation delay [ms/B]")->check(CLI::NonNegativeNumber)->capture_default_str();
        simulate->add_option("--double-spends", sim_ds, "Adversarial double-spend pairs per round (tree mode)")->check(CLI::NonNegativeNumber)->capture_default_str();
        simulate->add_option("--max-batch", sim_max_batch, "Child blocks per parent, 0 = unlimited (concurrent mode)")->check(CLI::NonNegativeNumber)->capture_default_str();
        simulate->add_option("--runs", sim_runs, "Independent runs with seeds seed..seed+k-1")->check(CLI::Range(1, 256))->capture_default_str();
        simulate->add_option("--report", sim_report, "Report file name inside the output directory")->capture_default_str();
        simulate->add_flag("--record-blocks", sim_record_blocks, "Include every block in the report");

        gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
        gen->add_option("--n", gen_n, "Number of transactions")->check(CLI::PositiveNumber)->capture_default_str();
        gen->add_option("--per-block", gen_per_block, "Transactions per block height")->check(CLI::PositiveNumber)->capture_default_str();
        gen->add_option("--mu", gen_mu, "Mean of lg(beta)")->capture_default_str();
        gen->add_option("--sigma", gen_sigma, "Std of lg(beta)")->check(CLI::NonNegativeNumber)->capture_default_str();
        gen->add_option("--size", gen_size, "Transaction size [B]")->check(CLI::PositiveNumber)->capture_default_str();
        gen->add_option("--out", gen_out, "Output file name inside the output directory")->capture_default_str();
    }

    Format format() const { return g.format == "delimited" ? Format::delimited : Format::table; }

    int run_segment(std::ostream& out) {
        std::vector<ExtendedTransaction> txs;
        if (!seg_dataset.empty()) {
            Dataset ds = load_dataset(seg_dataset);
            txs = std::move(ds.txs);
            emit_scalar(out, "dropped_zero_value", static_cast<double>(ds.dropped_zero_value), format());
            emit_scalar(out, "num_blocks", static_cast<double>(ds.num_blocks), format());
        } else {
            txs = synthetic_txs(g.seed, seg_synthetic, seg_mu, seg_sigma);
        }
        const RangeMode mode = seg_mode == "rounded" ? RangeMode::rounded : RangeMode::uniform;
        const Segmentation seg = hbs::segment(seg_levels, txs, mode);
        emit(out, segmentation_table(level_stats(seg)), format());
        Table b;
        b.title = "lg(beta) cut points";
        for (std::size_t k = 0; k < seg.boundaries.size(); ++k) b.columns.push_back("b" + std::to_string(k));
        b.rows = {{"boundary", seg.boundaries}};
        emit(out, b, format());
        const LogNormalFit fit = fit_lognormal(txs);
        emit_scalar(out, "lognormal_mu", fit.mu, format());
        emit_scalar(out, "lognormal_sigma", fit.sigma, format());
        if (seg_fig5) {
            const std::string p = out_path(g, "fig5.csv");
            write_text(p, to_delimited(fig5_series(txs, seg_bins)));
            out << "wrote " << p << '\n';
        }
        return 0;
    }

    int run_estimate(std::ostream& out) {
        const Format f = format();
        LevelStats st;
        long long nb = est_blocks;
        double total_value = 0;
        if (!est_dataset.empty()) {
            Dataset ds = load_dataset(est_dataset);
            const RangeMode mode = est_mode == "rounded" ? RangeMode::rounded : RangeMode::uniform;
            st = level_stats(hbs::segment(est_levels, ds.txs, mode));
            if (nb <= 0) nb = static_cast<long long>(ds.num_blocks);
            for (const auto& s : st.levels) total_value += s.total_value;
        } else if (!est_beta_bar.empty()) {
            const auto bb = parse_list(est_beta_bar, "--beta-bar");
            std::vector<double> bits = est_bits.empty() ? std::vector<double>(bb.size(), 0.0) : parse_list(est_bits, "--bits");
            if (bits.size() != bb.size()) throw Error("E_FLAG", "--bits must have as many entries as --beta-bar");
            for (std::size_t l = 0; l < bb.size(); ++l) {
                LevelStat s;
                s.count = 1;
                s.mean_beta = bb[l];
                s.total_bits = bits[l];
                st.levels.push_back(s);
            }
            if (nb <= 0) nb = 1;
        }
        std::vector<double> eta, times;
        if (!st.levels.empty()) {
            double c = est_c_eta;
            if (c <= 0) {
                c = compute_c_eta_flat(st, nb, est_target);
                emit_scalar(out, "c_eta", c, f);
                if (total_value > 0) emit_scalar(out, "c_eta_total_value", compute_c_eta_total_value(total_value, nb, est_target), f);
            } else {
                emit_scalar(out, "c_eta", c, f);
            }
            eta = eta_levels_flat(c, st);
            Table t;
            t.title = "Time investments and block times";
            t.columns = level_columns(st.L());
            t.rows.push_back({"mean(beta)", {}});
            for (const auto& s : st.levels) t.rows.back().second.push_back(s.present() ? s.mean_beta : 0);
            t.rows.push_back({"eta [s/b]", eta});
            const bool have_bits = std::any_of(st.levels.begin(), st.levels.end(), [](const LevelStat& s) { return s.total_bits > 0; });
            if (have_bits) {
                times = time_per_level(eta, avg_block_bits(st, nb));
                t.rows.push_back({"t [s]", times});
            }
            if (est_tree) t.rows.push_back({"eta tree [s/b]", eta_levels_tree(c, st)});
            const auto fee = fee_rates(eta, est_kappa);
            std::vector<double> ratio;
            for (double x : fee) ratio.push_back(x > 0 ? fee[0] / x : 0);
            t.rows.push_back({"fee/bit", fee});
            t.rows.push_back({"phi_0/phi_l", ratio});
            emit(out, t, f);
        }
        if (!est_times.empty()) times = parse_list(est_times, "--times");
        if (!times.empty()) {
            const auto rw = reward_split_flat(times, est_reward);
            Table t;
            t.title = "Rewards";
            t.columns = level_columns(static_cast<int>(times.size()));
            t.rows = {{"t [s]", times}, {"reward [BTC]", rw}};
            emit(out, t, f);
            const MinLevelCheck chk = check_min_level_time(times, est_t_min);
            emit_scalar(out, "last_level_ok", chk.ok ? 1 : 0, f);
            emit_scalar(out, "recommended_levels", chk.recommended_L, f);
            if (times.size() >= 2) {
                double tn = 0;
                for (std::size_t l = 1; l < times.size(); ++l) tn += times[l];
                if (tn <= est_target) emit_scalar(out, "lambda", homotopy_lambda(tn, est_target), f);
            }
        }
        if (st.levels.empty() && times.empty())
            throw Error("E_FLAG", "estimate needs --dataset, --beta-bar or --times");
        return 0;
    }

    int run_shardcalc(std::ostream& out) {
        const Format f = format();
        const int L = sc_levels;
        emit_scalar(out, "mfn_ratio", mfn_ratio(sc_N, L), f);
        emit_scalar(out, "mfn_ratio_full_tree", mfn_ratio(std::exp2(L) - 1, L), f);
        emit_scalar(out, "throughput_tx_per_s", tree_throughput(L, sc_target), f);
        emit_scalar(out, "mfn_fraction_deepest", mfn_fraction(L - 1), f);
        if (sc_rate > 0) {
            emit_scalar(out, "s_mfn_tx_per_s", mfn_store_rate(sc_rate, L), f);
            emit_scalar(out, "d_mfn_tx_per_s", mfn_download_rate(sc_rate, L), f);
            emit_scalar(out, "storage_mb_day", per_day_mb(mfn_store_rate(sc_rate, L), sc_tx_bytes), f);
            emit_scalar(out, "download_mb_day", per_day_mb(mfn_download_rate(sc_rate, L), sc_tx_bytes), f);
        }
        if (sc_optimal) {
            if (!(sc_rate > 0)) throw Error("E_FLAG", "--optimal needs --rate > 0");
            const OptimalLevels o = optimal_levels(sc_rate, sc_tx_bytes);
            emit_scalar(out, "L_star", o.L_star, f);
            emit_scalar(out, "L_int", o.L_int, f);
            emit_scalar(out, "storage_mb_day_at_L_star", o.storage_mb_day, f);
            emit_scalar(out, "download_mb_day_at_L_star", o.download_mb_day, f);
        }
        if (sc_routing) {
            if (!(sc_p > 0 && sc_p < 1)) throw Error("E_FLAG", "--p must be in (0,1)");
            Table t;
            t.title = "Peers needed to reach every shard with miss probability p";
            t.columns = {"level", "peers", "miss_probability"};
            for (int l = 0; l < L; ++l) {
                const long long n = required_peers(sc_p, l);
                t.rows.push_back({"l=" + std::to_string(l), {static_cast<double>(l), static_cast<double>(n), routing_miss_probability(n, l)}});
            }
            emit(out, t, f);
            emit_scalar(out, "required_peers", static_cast<double>(required_peers(sc_p, L - 1)), f);
        }
        auto write_fig = [&](const char* name, const SeriesTable& s) {
            const std::string p = out_path(g, name);
            write_text(p, to_delimited(s));
            out << "wrote " << p << '\n';
        };
        if (sc_fig6) write_fig("fig6.csv", fig6_series(24, sc_N, sc_target));
        if (sc_fig7) write_fig("fig7.csv", fig7_series({1700, 10000, 50000}, 29, sc_tx_bytes));
        if (sc_fig8) write_fig("fig8.csv", fig8_series(100, 49900, 100, sc_tx_bytes));
        return 0;
    }

    int run_energy(std::ostream& out) {
        const Format f = format();
        EnergyParams ep{en_eff, en_price, en_btcusd, en_phi, en_reward};
        NetworkParams net;
        net.total_hashrate = en_hash_th * 1e12;
        const EnergyCost tx = energy_per_tx(ep, net, en_size);
        const EnergyCost blk = energy_per_tx(ep, net, 1024 * 1024);
        emit_scalar(out, "tx_kwh", tx.kwh, f);
        emit_scalar(out, "tx_usd", tx.usd, f);
        emit_scalar(out, "block_kwh", blk.kwh, f);
        emit_scalar(out, "block_usd", blk.usd, f);
        emit_scalar(out, "network_twh_per_year", annualize_per_block(blk.kwh) / 1e9, f);
        const double e = energy_upper_bound(ep);
        emit_scalar(out, "rational_bound_kwh_per_block", e, f);
        emit_scalar(out, "rational_bound_twh_per_year", annualize_per_block(e) / 1e9, f);
        return 0;
    }

    SimConfig sim_config() const {
        SimConfig c;
        if (!g.config.empty()) {
            try {
                c = nlohmann::json::parse(read_text(g.config)).get<SimConfig>();
            } catch (const nlohmann::json::exception& e) {
                throw Error("E_CONFIG", g.config + ": " + e.what());
            }
        }
        auto given = [&](const char* name) { return simulate->count(name) > 0; };
        if (given("--mode")) c.mode = nlohmann::json(sim_mode).get<Mode>();
        if (given("--levels")) c.L = sim_levels;
        if (given("--window")) c.retarget_window = sim_window;
        if (given("--superblocks")) c.max_superblocks = sim_superblocks;
        if (given("--duration")) c.duration = sim_duration;
        if (given("--rate")) c.workload.rate = sim_rate;
        if (given("--mu")) c.workload.mu = sim_mu;
        if (given("--sigma")) c.workload.sigma = sim_sigma;
        if (given("--miners")) c.num_miners = sim_miners;
        if (given("--broadcast")) c.broadcast = nlohmann::json(sim_broadcast).get<Broadcast>();
        if (given("--basis")) c.difficulty_basis = nlohmann::json(sim_basis).get<DifficultyBasis>();
        if (given("--ms-per-byte")) c.propagation_ms_per_byte = sim_ms_per_byte;
        if (given("--double-spends")) c.double_spend_attempts_per_round = sim_ds;
        if (given("--max-batch")) c.max_batch = sim_max_batch;
        if (given("--record-blocks")) c.record_blocks = true;
        if (app.count("--seed") || g.config.empty()) c.seed = g.seed;
        c.validate();
        return c;
    }

    int run_simulate(std::ostream& out) {
        const Format f = format();
        const SimConfig c = sim_config();
        std::vector<SimReport> reports =
            sim_runs == 1 ? std::vector<SimReport>{simulate_one(c)} : simulate_runs(c, sim_runs);
        for (std::size_t k = 0; k < reports.size(); ++k) {
            const SimReport& r = reports[k];
            std::string name = sim_report;
            if (reports.size() > 1) {
                const auto dot = name.rfind('.');
                const std::string suffix = "-" + std::to_string(r.seed);
                name = dot == std::string::npos ? name + suffix : name.substr(0, dot) + suffix + name.substr(dot);
            }
            const std::string p = out_path(g, name);
            write_report(r, p);
            Table t;
            t.title = "Run seed " + std::to_string(r.seed) + " (" + r.mode + ")";
            t.columns = level_columns(r.L);
            std::vector<double> blocks, txs, mt, et, il, rl;
            for (const auto& lr : r.levels) {
                blocks.push_back(static_cast<double>(lr.blocks));
                txs.push_back(static_cast<double>(lr.txs));
                mt.push_back(lr.mean_mining_time);
                et.push_back(lr.expected_time);
                il.push_back(lr.median_inclusion_latency);
                rl.push_back(lr.median_root_latency);
            }
            t.rows = {{"blocks", blocks},           {"txs", txs},
                      {"mean mining time [s]", mt}, {"scheduled time [s]", et},
                      {"median inclusion [s]", il}, {"median root path [s]", rl}};
            emit(out, t, f);
            emit_scalar(out, "mean_superblock_time", r.mean_superblock_time, f);
            emit_scalar(out, "throughput_tx_per_s", r.throughput, f);
            emit_scalar(out, "conservation_violations", static_cast<double>(r.audits.conservation_violations), f);
            emit_scalar(out, "double_accepts", static_cast<double>(r.audits.double_accepts), f);
            out << "wrote " << p << '\n';
        }
        return 0;
    }

    static SimReport simulate_one(const SimConfig& c) { return Simulator(c).run(); }

    int run_gen(std::ostream& out) {
        WorkloadSpec w;
        if (!g.config.empty()) {
            try {
                w = nlohmann::json::parse(read_text(g.config)).value("workload", nlohmann::json(w)).get<WorkloadSpec>();
            } catch (const nlohmann::json::exception& e) {
                throw Error("E_CONFIG", g.config + ": " + e.what());
            }
        }
        if (gen->count("--mu") || g.config.empty()) w.mu = gen_mu;
        if (gen->count("--sigma") || g.config.empty()) w.sigma = gen_sigma;
        if (gen->count("--size") || g.config.empty()) {
            w.size_kind = SizeKind::fixed;
            w.size_fixed = gen_size;
        }
        std::mt19937_64 rng(g.seed);
        const auto rows = generate_rows(w, rng, gen_n, gen_per_block);
        const std::string p = out_path(g, gen_out);
        write_dataset(p, rows);
        out << "wrote " << p << " (" << rows.size() << " rows)\n";
        return 0;
    }
};

// Exit codes: 0 success, 2 validation error, 1 runtime error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Parser p;
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        p.app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << p.app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << p.app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    try {
        if (*p.segment) return p.run_segment(out);
        if (*p.estimate) return p.run_estimate(out);
        if (*p.shardcalc) return p.run_shardcalc(out);
        if (*p.energy) return p.run_energy(out);
        if (*p.simulate) return p.run_simulate(out);
        if (*p.gen) return p.run_gen(out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace hbs::cli
