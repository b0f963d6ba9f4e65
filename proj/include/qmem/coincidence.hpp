#pragma once

// Windowed coincidence counting on time-tag streams and the triggered-g2
// estimator with Poisson error propagation.

#include "qmem/timetag.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace qmem::coincidence {

struct CoincidenceTally {
    std::uint64_t n_h = 0;
    std::uint64_t n_h1 = 0;
    std::uint64_t n_h2 = 0;
    std::uint64_t n_h12 = 0;
    double window_ps = 0.0;
    double electronic_delay_ns = 0.0;
    double duration_s = 0.0;

    bool operator==(const CoincidenceTally&) const = default;
};

struct G2Estimate {
    double value = 0.0;
    double sigma = 0.0;
    /// No triple coincidences were seen: sigma omits the N_h12 term and
    /// one_count_limit holds the value a single triple would give.
    bool upper_bound = false;
    double one_count_limit = 0.0;
};

/// N_h12 N_h / (N_h1 N_h2) with independent-Poisson sigma.
G2Estimate g2_from_counts(double n_h, double n_h1, double n_h2, double n_h12);
G2Estimate g2_from_counts(const CoincidenceTally& tally);

/// Greedy earliest-match pairs with |t_b - t_a - delay| <= window/2.
/// Each tag participates in at most one pair.
std::uint64_t count_pairs(std::span<const TimeTag> stream, Channel a, Channel b, double window_ps, double delay_ps = 0.0);

/// Heralds matched (as in count_pairs) on both signal arms.
std::uint64_t count_triples(std::span<const TimeTag> stream, double window_ps, double delay_ps = 0.0);

/// Herald singles plus the three coincidence folds of a stream.
CoincidenceTally tally_stream(std::span<const TimeTag> stream, double window_ps, double delay_ps = 0.0,
                              double duration_s = 0.0);

struct DelayHistogram {
    double bin_width_ps = 0.0;
    /// Bin k covers [k, k + 1) * bin_width_ps; counts[0] is bin first_bin.
    std::int64_t first_bin = 0;
    std::vector<std::uint64_t> counts;

    double bin_start_ps(std::size_t i) const { return static_cast<double>(first_bin + static_cast<std::int64_t>(i)) * bin_width_ps; }
    double bin_center_ns(std::size_t i) const { return (bin_start_ps(i) + 0.5 * bin_width_ps) * 1e-3; }
    std::uint64_t total() const;
};

/// All herald -> signal (either arm) delays in [-range, range).
DelayHistogram delay_histogram(std::span<const TimeTag> stream, double bin_ps, double range_ns);

/// Standard deviations below the classical limit g2 = 1.
double classicality_z(double g2, double sigma);

/// (signal_plus_noise - noise) / noise from raw rates.
double snr(double signal_plus_noise_rate, double noise_rate);

void write_histogram_csv(std::ostream& out, const DelayHistogram& hist);
void write_tally_csv(std::ostream& out, const CoincidenceTally& tally);

}  // namespace qmem::coincidence
