#pragma once

#include "hbs/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hbs {

enum class SizeKind { fixed, empirical, lognormal };

struct MixtureComponent {
    double weight = 1;
    double mu = 3;      // mean of lg(beta)
    double sigma = 1;   // std of lg(beta)
    double size_bytes = 0;  // 0: use the workload size distribution
};

struct WorkloadSpec {
    double rate = 0.2;  // tx/s
    double mu = 3.0;
    double sigma = 1.0;
    SizeKind size_kind = SizeKind::fixed;
    double size_fixed = 250;
    std::vector<std::int64_t> size_empirical;
    double size_ln_mu = 5.5;  // natural-log bytes
    double size_ln_sigma = 0.4;
    std::vector<MixtureComponent> mixture;  // overrides (mu, sigma) when non-empty
    double level_override_fraction = 0;
    int override_level = -1;  // -1: uniform over levels

    void validate() const {
        if (!(rate > 0)) throw Error("E_CONFIG", "workload rate must be > 0");
        if (sigma < 0) throw Error("E_CONFIG", "workload sigma must be >= 0");
        if (size_kind == SizeKind::empirical && size_empirical.empty())
            throw Error("E_CONFIG", "empirical size distribution needs samples");
        if (level_override_fraction < 0 || level_override_fraction > 1)
            throw Error("E_CONFIG", "level_override_fraction must be in [0,1]");
        for (const auto& m : mixture)
            if (!(m.weight > 0) || m.sigma < 0) throw Error("E_CONFIG", "bad mixture component");
    }
};

struct TxDraw {
    double beta = 1;
    std::int64_t size_bytes = 1;
    std::int64_t value = 1;
};

template <class Rng>
std::int64_t draw_size(const WorkloadSpec& w, Rng& rng) {
    switch (w.size_kind) {
    case SizeKind::fixed:
        return std::max<std::int64_t>(1, std::llround(w.size_fixed));
    case SizeKind::empirical: {
        std::uniform_int_distribution<std::size_t> pick(0, w.size_empirical.size() - 1);
        return std::max<std::int64_t>(1, w.size_empirical[pick(rng)]);
    }
    case SizeKind::lognormal: {
        std::lognormal_distribution<double> d(w.size_ln_mu, w.size_ln_sigma);
        return std::max<std::int64_t>(1, std::llround(d(rng)));
    }
    }
    return 1;
}

template <class Rng>
TxDraw draw_tx(const WorkloadSpec& w, Rng& rng) {
    double mu = w.mu, sigma = w.sigma, fixed_size = 0;
    if (!w.mixture.empty()) {
        double tot = 0;
        for (const auto& m : w.mixture) tot += m.weight;
        double u = std::uniform_real_distribution<double>(0, tot)(rng);
        const MixtureComponent* c = &w.mixture.back();
        for (const auto& m : w.mixture) {
            if (u < m.weight) {
                c = &m;
                break;
            }
            u -= m.weight;
        }
        mu = c->mu;
        sigma = c->sigma;
        fixed_size = c->size_bytes;
    }
    TxDraw d;
    const double lg = sigma > 0 ? std::normal_distribution<double>(mu, sigma)(rng) : mu;
    d.size_bytes = fixed_size > 0 ? std::llround(fixed_size) : draw_size(w, rng);
    d.value = std::max<std::int64_t>(1, std::llround(std::pow(10.0, lg) * 8.0 * static_cast<double>(d.size_bytes)));
    d.beta = static_cast<double>(d.value) / (8.0 * static_cast<double>(d.size_bytes));
    return d;
}

template <class Rng>
double next_arrival_gap(const WorkloadSpec& w, Rng& rng) {
    return std::exponential_distribution<double>(w.rate)(rng);
}

// Optional user-requested level; nullopt means auto-leveled.
template <class Rng>
std::optional<int> draw_override(const WorkloadSpec& w, int L, Rng& rng) {
    if (w.level_override_fraction <= 0) return std::nullopt;
    if (std::uniform_real_distribution<double>(0, 1)(rng) >= w.level_override_fraction) return std::nullopt;
    if (w.override_level >= 0) return std::min(w.override_level, L - 1);
    return std::uniform_int_distribution<int>(0, L - 1)(rng);
}

template <class Rng>
Digest random_digest(Rng& rng) {
    Digest d;
    for (std::size_t i = 0; i < d.size(); i += 8) {
        const std::uint64_t x = rng();
        for (std::size_t k = 0; k < 8; ++k) d[i + k] = static_cast<std::uint8_t>(x >> (8 * k));
    }
    return d;
}

}  // namespace hbs
