#pragma once

#include "hbs/core_model.hpp"
#include "hbs/economics.hpp"
#include "hbs/report.hpp"
#include "hbs/segmentation.hpp"
#include "hbs/sharding.hpp"
#include "hbs/workload.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbs {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetRow {
    std::int64_t block_height = 0;
    std::string txid;
    std::int64_t size = 0;
    std::int64_t output_value = 0;
    std::map<std::string, std::string> extra;
};

struct Dataset {
    std::vector<DatasetRow> rows;            // kept rows, file order
    std::vector<ExtendedTransaction> txs;    // parallel to rows
    std::size_t dropped_zero_value = 0;
    std::size_t num_blocks = 0;              // distinct block heights
    std::string path;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::int64_t parse_int(const std::string& s, const std::string& what, std::size_t row) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw Error("E_MALFORMED_ROW", "row " + std::to_string(row) + ": column " + what + " is not an integer: '" + s + "'");
    return v;
}

// txid hex is hashed to get the opaque id and the synthetic single input.
inline ExtendedTransaction row_to_tx(const DatasetRow& r) {
    ExtendedTransaction t;
    t.id = sha256(r.txid);
    t.input_ref = sha256("input:" + r.txid);
    t.value = r.output_value;
    t.size_bytes = r.size;
    t.lambda = 1.0;
    return t;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path);
    Dataset ds;
    ds.path = path;
    std::string line;
    if (!std::getline(in, line)) throw Error("E_MISSING_COLUMN", "dataset " + path + " has no header row");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"block_height", "txid", "size", "output_value"})
        if (!col.count(need)) throw Error("E_MISSING_COLUMN", "dataset " + path + " lacks column " + need);
    std::map<std::int64_t, bool> heights;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw Error("E_MALFORMED_ROW", "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                               " fields, got " + std::to_string(f.size()));
        DatasetRow r;
        r.block_height = parse_int(f[col["block_height"]], "block_height", row);
        r.txid = f[col["txid"]];
        r.size = parse_int(f[col["size"]], "size", row);
        r.output_value = parse_int(f[col["output_value"]], "output_value", row);
        if (r.size < 1) throw Error("E_MALFORMED_ROW", "row " + std::to_string(row) + ": size must be >= 1");
        if (r.output_value < 0) throw Error("E_MALFORMED_ROW", "row " + std::to_string(row) + ": negative output_value");
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] != "block_height" && header[i] != "txid" && header[i] != "size" && header[i] != "output_value")
                r.extra[header[i]] = f[i];
        if (r.output_value == 0) {
            ++ds.dropped_zero_value;
            continue;
        }
        heights[r.block_height] = true;
        ds.txs.push_back(row_to_tx(r));
        ds.rows.push_back(std::move(r));
    }
    ds.num_blocks = heights.size();
    return ds;
}

inline void write_dataset(const std::string& path, const std::vector<DatasetRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset " + path);
    std::vector<std::string> extras;
    if (!rows.empty())
        for (const auto& [k, v] : rows.front().extra) extras.push_back(k);
    out << "block_height,txid,size,output_value";
    for (const auto& e : extras) out << ',' << e;
    out << '\n';
    for (const auto& r : rows) {
        out << r.block_height << ',' << r.txid << ',' << r.size << ',' << r.output_value;
        for (const auto& e : extras) {
            auto it = r.extra.find(e);
            out << ',' << (it == r.extra.end() ? "" : it->second);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

struct TimedTx {
    double time = 0;
    ExtendedTransaction tx;
};

// Poisson stream over [0, duration). Inputs are fresh random references.
template <class Rng>
std::vector<TimedTx> generate_workload(const WorkloadSpec& spec, Rng& rng, double duration, int L = 1) {
    spec.validate();
    std::vector<TimedTx> out;
    double t = next_arrival_gap(spec, rng);
    while (t < duration) {
        TxDraw d = draw_tx(spec, rng);
        TimedTx e;
        e.time = t;
        e.tx.id = random_digest(rng);
        e.tx.input_ref = random_digest(rng);
        e.tx.value = d.value;
        e.tx.size_bytes = d.size_bytes;
        e.tx.requested_level = draw_override(spec, L, rng);
        out.push_back(std::move(e));
        t += next_arrival_gap(spec, rng);
    }
    return out;
}

// Synthetic dataset rows; block_height advances every `per_block` rows.
template <class Rng>
std::vector<DatasetRow> generate_rows(const WorkloadSpec& spec, Rng& rng, std::size_t n, std::size_t per_block) {
    spec.validate();
    std::vector<DatasetRow> rows;
    for (std::size_t k = 0; k < n; ++k) {
        TxDraw d = draw_tx(spec, rng);
        DatasetRow r;
        r.block_height = static_cast<std::int64_t>(k / std::max<std::size_t>(1, per_block));
        r.txid = to_hex(random_digest(rng));
        r.size = d.size_bytes;
        r.output_value = d.value;
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- reports ---------------------------------------------------------------

inline std::string report_to_string(const SimReport& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_report(const SimReport& r, const std::string& path) { write_text(path, report_to_string(r)); }

inline SimReport read_report(const std::string& path) {
    const std::string text = read_text(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (!j.contains("version")) throw IoError(path + ": report lacks a version field");
    if (j.at("version").get<int>() != 1) throw IoError(path + ": unsupported report version");
    return j.get<SimReport>();
}

// ---- plot-ready series -------------------------------------------------------

struct SeriesTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};

inline std::string format_number(double x) {
    if (std::isfinite(x) && x == std::trunc(x) && std::fabs(x) < 1e15) return std::to_string(static_cast<long long>(x));
    nlohmann::json j = x;
    return j.dump();
}

inline std::string to_delimited(const SeriesTable& t, char sep = ',') {
    std::string s;
    for (std::size_t i = 0; i < t.names.size(); ++i) s += (i ? std::string(1, sep) : "") + t.names[i];
    s += '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? std::string(1, sep) : "") + format_number(r[i]);
        s += '\n';
    }
    return s;
}

// Histogram of lg(beta) with the fitted normal density at bin centers.
inline SeriesTable fig5_series(const std::vector<ExtendedTransaction>& txs, int bins = 100) {
    SeriesTable t;
    t.names = {"lg_beta", "density", "lognormal_pdf"};
    const auto lg = lg_betas(txs);
    const Histogram h = density_histogram(lg, bins);
    const LogNormalFit fit = fit_lognormal_lg(lg);
    for (std::size_t i = 0; i < h.density.size(); ++i) {
        const double c = (h.edges[i] + h.edges[i + 1]) / 2;
        t.rows.push_back({c, h.density[i], fit.pdf(c)});
    }
    return t;
}

inline SeriesTable fig6_series(int L_max = 24, double N = 4200, double target = kTargetTime) {
    SeriesTable t;
    t.names = {"L", "lg(r) N=" + format_number(N), "lg(r) N=2^L-1", "lg((2^L-1)/600)"};
    for (int L = 1; L <= L_max; ++L)
        t.rows.push_back({static_cast<double>(L), std::log10(mfn_ratio(N, L)),
                          std::log10(mfn_ratio(std::exp2(L) - 1, L)), std::log10(tree_throughput(L, target))});
    return t;
}

inline SeriesTable fig7_series(const std::vector<double>& rates = {1700, 10000, 50000}, int L_max = 29,
                               double tx_bytes = 250) {
    SeriesTable t;
    t.names = {"L"};
    for (double n : rates) t.names.push_back("download_mb_day n=" + format_number(n));
    for (int L = 1; L <= L_max; ++L) {
        std::vector<double> row{static_cast<double>(L)};
        for (double n : rates) row.push_back(per_day_mb(mfn_download_rate(n, L), tx_bytes));
        t.rows.push_back(row);
    }
    return t;
}

inline SeriesTable fig8_series(double n_from = 100, double n_to = 49900, double step = 100, double tx_bytes = 250) {
    SeriesTable t;
    t.names = {"n", "L_star", "storage_mb_day", "download_mb_day"};
    for (double n = n_from; n <= n_to + 1e-9; n += step) {
        const OptimalLevels o = optimal_levels(n, tx_bytes);
        t.rows.push_back({n, o.L_star, o.storage_mb_day, o.download_mb_day});
    }
    return t;
}

}  // namespace hbs
