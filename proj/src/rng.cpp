#include "qmem/rng.hpp"

#include <algorithm>
#include <limits>

namespace qmem::rng {

namespace {

std::uint64_t combine(std::uint32_t hi, std::uint32_t lo) { return (static_cast<std::uint64_t>(hi) << 32) | lo; }

double log_choose(double n, double k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint32_t variant) {
    const auto out = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), variant,
                                 static_cast<std::uint32_t>(Domain::seed_derive)},
                                {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return combine(out[0], out[1]);
}

std::uint64_t binomial(std::uint64_t n, double p, double u) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double nd = static_cast<double>(n);
    const double mean = nd * p;
    const double sd = std::sqrt(nd * p * (1.0 - p));
    // Start far enough below the mean that the skipped mass is < 1e-300.
    const double start = std::max(0.0, std::floor(mean - 40.0 * sd - 1.0));
    auto k = static_cast<std::uint64_t>(start);
    double pmf = std::exp(log_choose(nd, start) + start * std::log(p) + (nd - start) * std::log1p(-p));
    double cdf = pmf;
    const double odds = p / (1.0 - p);
    while (cdf <= u && k < n) {
        pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
        ++k;
        cdf += pmf;
        if (pmf < 1e-300 && static_cast<double>(k) > mean) break;
    }
    return k;
}

std::uint64_t hypergeometric(std::uint64_t population, std::uint64_t successes, std::uint64_t draws, double u) {
    const std::uint64_t kmin = draws + successes > population ? draws + successes - population : 0;
    const std::uint64_t kmax = std::min(draws, successes);
    if (kmin == kmax) return kmin;
    const double N = static_cast<double>(population);
    const double K = static_cast<double>(successes);
    const double n = static_cast<double>(draws);
    auto k = kmin;
    const double kd = static_cast<double>(k);
    double pmf = 1.0;
    if (kmin == 0 && successes <= 64) {
        // C(N-K, n) / C(N, n) as a short product.
        for (std::uint64_t j = 0; j < successes; ++j) {
            const double jd = static_cast<double>(j);
            pmf *= (N - n - jd) / (N - jd);
        }
    } else {
        pmf = std::exp(log_choose(K, kd) + log_choose(N - K, n - kd) - log_choose(N, n));
    }
    double cdf = pmf;
    while (cdf <= u && k < kmax) {
        const double kk = static_cast<double>(k);
        pmf *= (K - kk) * (n - kk) / ((kk + 1.0) * (N - K - n + kk + 1.0));
        ++k;
        cdf += pmf;
    }
    return k;
}

std::uint64_t poisson(double mean, double u) {
    if (mean <= 0.0) return 0;
    std::uint64_t k = 0;
    double pmf = std::exp(-mean);
    double cdf = pmf;
    while (cdf <= u) {
        ++k;
        pmf *= mean / static_cast<double>(k);
        cdf += pmf;
        if (pmf < 1e-300 && static_cast<double>(k) > mean) break;
    }
    return k;
}

std::uint64_t zero_truncated_poisson(double mean, double u) {
    if (mean <= 0.0) return 1;
    const double norm = -std::expm1(-mean);
    std::uint64_t k = 1;
    double pmf = std::exp(-mean) * mean / norm;
    double cdf = pmf;
    while (cdf <= u) {
        ++k;
        pmf *= mean / static_cast<double>(k);
        cdf += pmf;
        if (pmf < 1e-300 && static_cast<double>(k) > mean) break;
    }
    return k;
}

}  // namespace qmem::rng
