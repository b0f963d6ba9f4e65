#pragma once

// Pulse-train Monte Carlo. Every variate of pulse i is keyed by (seed, i), and
// the set of pulses with any detector activity is fixed by a keyed binary tree
// over blocks of pulses, so the per-pulse and skipping engines, any chunking
// and any worker count produce identical output.

#include "qmem/coincidence.hpp"
#include "qmem/config.hpp"
#include "qmem/timetag.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace qmem::montecarlo {

enum class SinkMode { tallies_only, time_tags };
enum class Engine { naive, skipping };

struct TallySet {
    std::uint64_t pulses = 0;
    /// Pulses in which at least one detection event was generated.
    std::uint64_t active_pulses = 0;
    std::array<std::uint64_t, kChannelCount> singles{};
    /// Pulse-gated windowed coincidences.
    coincidence::CoincidenceTally coincidences;
    /// Heralds coincident with either signal arm.
    std::uint64_t n_hs = 0;
    /// Metadata; not part of equality.
    double wall_time_s = 0.0;

    void merge(const TallySet& other);
    bool operator==(const TallySet& other) const;
};

struct SimulationResult {
    TallySet tallies;
    /// Time-sorted; empty unless SinkMode::time_tags.
    std::vector<TimeTag> tags;
    /// Skipping was requested but p_any > kSkipLimit.
    bool skipping_fallback = false;
};

inline constexpr double kSkipLimit = 0.1;

/// Probability that a pulse produces at least one detection event.
double active_probability(const ExperimentConfig& cfg);

/// Worker count from QMEM_WORKERS (default 1).
unsigned workers_from_env();

/// workers = 0 reads QMEM_WORKERS.
SimulationResult simulate(const ExperimentConfig& cfg, std::uint64_t n_pulses, std::uint64_t seed,
                          SinkMode sink = SinkMode::tallies_only, unsigned workers = 0);

SimulationResult simulate_skipping(const ExperimentConfig& cfg, std::uint64_t n_pulses, std::uint64_t seed,
                                   SinkMode sink = SinkMode::tallies_only, unsigned workers = 0);

/// Pulses [first, first + count) as one chunk; dead-time state entering the
/// chunk is reconstructed from earlier pulses.
SimulationResult simulate_range(const ExperimentConfig& cfg, Engine engine, std::uint64_t first,
                                std::uint64_t count, std::uint64_t seed, SinkMode sink = SinkMode::tallies_only);

}  // namespace qmem::montecarlo
