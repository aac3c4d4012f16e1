#include "hbs/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

using namespace hbs;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "hbs");
    std::ostringstream o, e;
    CliRun r;
    r.code = cli::run_cli(args, o, e);
    r.out = o.str();
    r.err = e.str();
    return r;
}

// Delimited output: "name,value" scalars and "label,v0,v1,..." table rows.
struct Parsed {
    std::map<std::string, double> scalar;
    std::map<std::string, std::vector<double>> row;
};

Parsed parse(const std::string& text) {
    Parsed p;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("quantity,", 0) == 0 || line.rfind("wrote ", 0) == 0) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        std::vector<double> v;
        for (std::size_t i = 1; i < f.size(); ++i) v.push_back(std::stod(f[i]));
        if (v.size() == 1) p.scalar[f[0]] = v[0];
        p.row[f[0]] = v;
    }
    return p;
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("hbs_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Cli, RoutingPeersAtDepthSixteen) {
    const CliRun r = run({"--format", "delimited", "shardcalc", "--levels", "16", "--routing", "--p", "1e-10"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Parsed p = parse(r.out);
    EXPECT_EQ(p.scalar.at("required_peers"), static_cast<double>(required_peers(1e-10, 15)));
    EXPECT_NEAR(p.scalar.at("required_peers"), 754500, 754500 * 0.005);
    EXPECT_EQ(p.scalar.at("mfn_ratio"), mfn_ratio(4200, 16));
    EXPECT_EQ(p.scalar.at("throughput_tx_per_s"), tree_throughput(16, 600));
}

TEST(Cli, ShardcalcOptimalMatchesLibrary) {
    const CliRun r = run({"--format", "delimited", "shardcalc", "--rate", "1700", "--optimal"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Parsed p = parse(r.out);
    const OptimalLevels o = optimal_levels(1700, 250);
    EXPECT_EQ(p.scalar.at("L_star"), o.L_star);
    EXPECT_EQ(p.scalar.at("download_mb_day_at_L_star"), o.download_mb_day);
    EXPECT_EQ(p.scalar.at("storage_mb_day"), per_day_mb(mfn_store_rate(1700, 10), 250));
}

TEST(Cli, EstimateWithGivenCalibration) {
    const CliRun r = run({"--format", "delimited", "estimate", "--beta-bar", "4.6e4,23.4,3.2e-3", "--bits",
                       "1e6,2e6,3e6", "--c-eta", "0.036", "--tree"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Parsed p = parse(r.out);
    EXPECT_EQ(p.scalar.at("c_eta"), 0.036);
    const std::vector<double> want{0.036 * 4.6e4 / 1e8, 0.036 * 23.4 / 1e8, 0.036 * 3.2e-3 / 1e8};
    const auto& eta = p.row.at("eta [s/b]");
    ASSERT_EQ(eta.size(), 3u);
    for (int l = 0; l < 3; ++l) {
        EXPECT_NEAR(eta[l], want[l], want[l] * 1e-12);
        EXPECT_NEAR(p.row.at("t [s]")[l], want[l] * 1e6 * (l + 1), want[l] * 1e-6);
        EXPECT_NEAR(p.row.at("eta tree [s/b]")[l], want[l] * std::exp2(l), want[l] * 1e-9);
    }
    EXPECT_NEAR(p.row.at("phi_0/phi_l")[2], 4.6e4 / 3.2e-3, 1e-3);
}

TEST(Cli, EstimateTimesGivesRewardsAndLambda) {
    const CliRun r = run({"--format", "delimited", "estimate", "--times", "300,200,100", "--t-min", "50"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Parsed p = parse(r.out);
    const auto& rw = p.row.at("reward [BTC]");
    EXPECT_NEAR(rw[0] + rw[1] + rw[2], 6.25, 1e-12);
    EXPECT_NEAR(rw[0], 3.125, 1e-12);
    EXPECT_EQ(p.scalar.at("last_level_ok"), 1);
    EXPECT_NEAR(p.scalar.at("lambda"), 0.5, 1e-15);
}

TEST(Cli, EstimateFromDatasetCalibratesToTarget) {
    const fs::path d = scratch("estimate");
    ASSERT_EQ(run({"--out-dir", d.string(), "--seed", "4", "gen", "--n", "20000", "--per-block", "2000"}).code, 0);
    const CliRun r = run({"--format", "delimited", "estimate", "--dataset", (d / "dataset.csv").string(), "--levels", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Parsed p = parse(r.out);
    double sum = 0;
    for (double t : p.row.at("t [s]")) sum += t;
    EXPECT_NEAR(sum, 600, 1e-6);
    fs::remove_all(d);
}

TEST(Cli, EnergyMatchesLibrary) {
    const CliRun r = run({"--format", "delimited", "energy", "--hashrate-th", "1.5e8", "--size", "250"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Parsed p = parse(r.out);
    NetworkParams net;
    net.total_hashrate = 1.5e20;
    const EnergyCost want = energy_per_tx(EnergyParams{}, net, 250);
    EXPECT_EQ(p.scalar.at("tx_kwh"), want.kwh);
    EXPECT_EQ(p.scalar.at("tx_usd"), want.usd);
    EXPECT_EQ(p.scalar.at("rational_bound_kwh_per_block"), energy_upper_bound(EnergyParams{}));
}

TEST(Cli, SegmentSyntheticIsSeeded) {
    const auto a = run({"--seed", "7", "--format", "delimited", "segment", "--synthetic", "3000", "--levels", "4"});
    const auto b = run({"--seed", "7", "--format", "delimited", "segment", "--synthetic", "3000", "--levels", "4"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const Parsed p = parse(a.out);
    double n = 0;
    for (double c : p.row.at("|T_l|")) n += c;
    EXPECT_EQ(n, 3000);
}

TEST(Cli, SimulateSameSeedSameReport) {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    for (const auto& d : {a, b}) {
        const CliRun r = run({"--seed", "11", "--out-dir", d.string(), "simulate", "--mode", "tree", "--levels", "3",
                           "--superblocks", "30", "--double-spends", "2"});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    const std::string ra = read_text((a / "report.json").string());
    EXPECT_EQ(ra, read_text((b / "report.json").string()));
    const SimReport rep = read_report((a / "report.json").string());
    EXPECT_EQ(rep.seed, 11u);
    EXPECT_EQ(rep.audits.double_accepts, 0u);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, SimulateSeveralRunsWritesOneReportEach) {
    const fs::path d = scratch("sim_runs");
    const CliRun r = run({"--seed", "3", "--out-dir", d.string(), "simulate", "--superblocks", "10", "--runs", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int s : {3, 4, 5}) EXPECT_TRUE(fs::exists(d / ("report-" + std::to_string(s) + ".json")));
    fs::remove_all(d);
}

TEST(Cli, FigureFilesWritten) {
    const fs::path d = scratch("figs");
    ASSERT_EQ(run({"--out-dir", d.string(), "shardcalc", "--fig6", "--fig7", "--fig8"}).code, 0);
    EXPECT_EQ(read_text((d / "fig6.csv").string()), to_delimited(fig6_series()));
    EXPECT_EQ(read_text((d / "fig8.csv").string()), to_delimited(fig8_series()));
    fs::remove_all(d);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"shardcalc", "--bogus"}).code, 2);
    EXPECT_EQ(run({"segment", "--levels", "0"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"estimate"}).code, 2);
    EXPECT_EQ(run({"estimate", "--beta-bar", "1,x"}).code, 2);
    EXPECT_EQ(run({"estimate", "--times", "700,100"}).code, 0);
    EXPECT_EQ(run({"simulate", "--levels", "2", "--window", "0"}).code, 2);
    const CliRun missing = run({"segment", "--dataset", "/nonexistent/d.csv"});
    EXPECT_EQ(missing.code, 1);
    EXPECT_NE(missing.err.find("/nonexistent/d.csv"), std::string::npos);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, EveryOptionDocumented) {
    const std::string readme = read_text(std::string(HBS_SOURCE_DIR) + "/README.md");
    cli::Parser p;
    for (CLI::App* sub : {&p.app, p.segment, p.estimate, p.shardcalc, p.energy, p.simulate, p.gen}) {
        const CliRun help = sub == &p.app ? run({"--help"}) : run({sub->get_name(), "--help"});
        for (const CLI::Option* o : sub->get_options()) {
            if (o->get_lnames().empty() || o->get_lnames()[0] == "help") continue;
            const std::string flag = "--" + o->get_lnames()[0];
            EXPECT_NE(help.out.find(flag), std::string::npos) << sub->get_name() << " help lacks " << flag;
            EXPECT_NE(readme.find(flag), std::string::npos) << "README lacks " << sub->get_name() << " " << flag;
        }
    }
}

TEST(Cli, BinaryRuns) {
    const std::string cmd = std::string(HBS_CLI_PATH) + " shardcalc --levels 4 > /dev/null";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
    const std::string bad = std::string(HBS_CLI_PATH) + " shardcalc --levels x 2> /dev/null";
    EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
}
