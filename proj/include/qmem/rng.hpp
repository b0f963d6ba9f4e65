#pragma once

// Counter-based random variates: every draw is a pure function of
// (seed, counter), so results do not depend on chunking or thread count.

#include <array>
#include <cmath>
#include <cstdint>

namespace qmem::rng {

/// Philox4x32-10 block function.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53} * c0;
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57} * c2;
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += 0x9E3779B9;
        k1 += 0xBB67AE85;
    }
    return {c0, c1, c2, c3};
}

/// Key separation for independent variate families.
enum class Domain : std::uint32_t {
    pulse = 0x70756c73,       // per-pulse physics
    tree_count = 0x74636e74,  // active-pulse tree: subtree counts
    tree_pick = 0x74706b63,   // active-pulse tree: single-event position
    seed_derive = 0x73656564,
};

/// 53-bit uniform in [0,1).
inline double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// One uniform in [0,1) keyed by (seed, a, b, domain).
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint32_t b, Domain domain) {
    const auto out = philox4x32(
        {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, static_cast<std::uint32_t>(domain)},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return to_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]);
}

/// Deterministic child seed, e.g. one per sweep point.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint32_t variant = 0);

/// Sequential variates j = 0, 1, 2, ... for a single (seed, index) pair.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t index, Domain domain = Domain::pulse)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          index_(index),
          domain_(domain) {}

    std::uint64_t next_bits() {
        if (have_ == 0) refill();
        return buffer_[--have_];
    }
    /// [0,1)
    double uniform() { return to_unit(next_bits()); }
    /// (0,1]
    double uniform_pos() { return 1.0 - uniform(); }
    /// Standard normal by Box-Muller (cosine branch only).
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(2.0 * M_PI * uniform());
    }

private:
    void refill() {
        const auto out = philox4x32({static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                                     counter_++, static_cast<std::uint32_t>(domain_)},
                                    key_);
        buffer_[1] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        buffer_[0] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        have_ = 2;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t index_;
    Domain domain_;
    std::uint32_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int have_ = 0;
};

/// Inverse-CDF samplers; u is a uniform in [0,1).
std::uint64_t binomial(std::uint64_t n, double p, double u);
std::uint64_t hypergeometric(std::uint64_t population, std::uint64_t successes, std::uint64_t draws, double u);
std::uint64_t poisson(double mean, double u);
/// Poisson conditioned on at least one event.
std::uint64_t zero_truncated_poisson(double mean, double u);

}  // namespace qmem::rng
