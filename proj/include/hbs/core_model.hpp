#pragma once

#include "hbs/digest.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbs {

constexpr std::int64_t kSatPerBtc = 100000000;
constexpr double kTargetTime = 600.0;
constexpr std::int64_t kHeaderBytes = 80;

// Domain error carrying a stable code, e.g. "E_DOUBLE_SPEND".
class Error : public std::invalid_argument {
public:
    Error(std::string code, const std::string& what)
        : std::invalid_argument(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct ExtendedTransaction {
    Digest id{};
    Digest input_ref{};
    std::vector<Digest> extra_inputs;  // non-empty only for multi-input txs
    std::int64_t value = 1;            // satoshi
    std::int64_t size_bytes = 1;
    double lambda = 1.0;
    std::optional<double> eta;         // s/bit
    std::optional<int> requested_level;

    std::int64_t bits() const { return 8 * size_bytes; }
    std::size_t input_count() const { return 1 + extra_inputs.size(); }
};

struct NetworkParams {
    double total_hashrate = 0;  // H/s
    double difficulty = 1;
    double target_superblock_time = kTargetTime;
    int retarget_window = 2016;
    std::int64_t max_block_bits = 8LL * 1024 * 1024;
};

struct EconomicConstants {
    std::optional<double> gamma;  // stored, never used
    double c_eta = 0;             // s/BTC
    static constexpr std::int64_t satoshi_per_btc = kSatPerBtc;
};

inline void check_tx(const ExtendedTransaction& tx) {
    if (tx.value < 1) throw Error("E_ZERO_VALUE", "transaction " + to_hex(tx.id) + " has value < 1");
    if (tx.size_bytes < 1) throw Error("E_BAD_SIZE", "transaction " + to_hex(tx.id) + " has size < 1");
    if (!(tx.lambda > 0 && tx.lambda <= 1)) throw Error("E_BAD_LAMBDA", "lambda outside (0,1]");
    if (!tx.extra_inputs.empty() && tx.requested_level.value_or(0) != 0)
        throw Error("E_MULTI_INPUT_SHARDED", "multi-input transaction " + to_hex(tx.id) + " requests level > 0");
}

// beta = v / b in satoshi per bit
inline double value_per_bit(const ExtendedTransaction& tx) {
    if (tx.value < 1) throw Error("E_ZERO_VALUE", "transaction " + to_hex(tx.id) + " has value < 1");
    if (tx.size_bytes < 1) throw Error("E_BAD_SIZE", "transaction " + to_hex(tx.id) + " has size < 1");
    return static_cast<double>(tx.value) / (8.0 * static_cast<double>(tx.size_bytes));
}

inline double hash_time(std::int64_t size_bits, double eta) {
    if (size_bits < 0 || !(eta > 0)) throw Error("E_DOMAIN", "hash_time needs size_bits >= 0 and eta > 0");
    return eta * static_cast<double>(size_bits);
}

inline double tx_difficulty(const ExtendedTransaction& tx, const NetworkParams& net) {
    if (!tx.eta) throw Error("E_NO_LEVEL", "transaction " + to_hex(tx.id) + " has no time investment assigned");
    if (!(tx.lambda > 0 && tx.lambda <= 1)) throw Error("E_BAD_LAMBDA", "lambda outside (0,1]");
    return tx.lambda * net.total_hashrate * (*tx.eta) * static_cast<double>(tx.bits());
}

inline double tx_security(const ExtendedTransaction& tx, const NetworkParams& net) {
    if (tx.value < 1) throw Error("E_ZERO_VALUE", "security undefined for value 0");
    return tx_difficulty(tx, net) / static_cast<double>(tx.value);
}

// h_B = 2^48 * D / (65535 * 600)
inline double hashrate_from_difficulty(double difficulty) {
    if (!(difficulty > 0)) throw Error("E_DOMAIN", "difficulty must be positive");
    return std::ldexp(difficulty, 48) / (65535.0 * kTargetTime);
}

// Common shorthand 2^32 * D / 600; smaller than the exact form by 65535/65536.
inline double hashrate_from_difficulty_approx(double difficulty) {
    return std::ldexp(difficulty, 32) / kTargetTime;
}

inline double difficulty_from_hashrate(double hashrate) {
    if (!(hashrate > 0)) throw Error("E_DOMAIN", "hashrate must be positive");
    return std::ldexp(hashrate * 65535.0 * kTargetTime, -48);
}

inline double eta_B_estimate(double avg_block_bits) {
    if (!(avg_block_bits > 0)) throw Error("E_DOMAIN", "average block size must be positive");
    return kTargetTime / avg_block_bits;
}

}  // namespace hbs
