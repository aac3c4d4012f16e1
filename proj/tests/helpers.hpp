#pragma once

#include "hbs/core_model.hpp"
#include "hbs/digest.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace hbs::test {

inline ExtendedTransaction make_tx(std::int64_t value, std::int64_t size_bytes, std::uint64_t n = 0) {
    ExtendedTransaction t;
    t.id = counter_id(100, n);
    t.input_ref = counter_id(101, n);
    t.value = value;
    t.size_bytes = size_bytes;
    return t;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Agreement with a value printed to two significant figures: within one unit
// of its second digit.
inline bool matches_two_sig_figs(double x, double printed) {
    const double unit = std::pow(10.0, std::floor(std::log10(std::abs(printed))) - 1);
    return std::abs(x - printed) <= unit * (1 + 1e-9);
}

}  // namespace hbs::test
