#pragma once

// Physical parameterization of the heralded-source / phonon-memory experiment.
//
// Every quantity carries its unit in the field name. Defaults reproduce the
// calibrated laboratory configuration; fields marked "calibrated" are produced
// by model::calibrate_reference_config() and frozen here.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace qmem {

enum class Stage { memory_input, memory_output };

enum class Channel : std::uint8_t { herald = 0, signal1 = 1, signal2 = 2 };

inline constexpr std::size_t kChannelCount = 3;

std::string_view to_string(Stage stage);
std::string_view to_string(Channel channel);

struct LaserConfig {
    double rep_rate_MHz = 80.0;
    double pulse_fwhm_fs = 190.0;
    double write_energy_nJ = 6.25;
    double read_energy_nJ = 6.25;

    double period_ns() const { return 1e3 / rep_rate_MHz; }
    double rep_rate_Hz() const { return rep_rate_MHz * 1e6; }
    /// Pulse period rounded to whole femtoseconds (time-tag clock).
    std::uint64_t period_fs() const;
};

struct SourceConfig {
    double mean_pairs_mu = 0.0;  // calibrated, see kDefault* in config.cpp
    int schmidt_modes_K = 1;
    /// Herald-arm transmission per pair, excluding the herald detector.
    /// Ignored (derived) while ExperimentConfig::herald_click_prob_per_pulse > 0.
    double herald_click_prob_per_pair = 0.0;
    double signal_heralding_eff = 0.16;
    double photon_fwhm_fs = 260.0;
    int n_max = 20;
};

struct MemoryConfig {
    double write_kappa_per_nJ = 0.0;  // ln(1.25)/12.5
    double read_kappa_per_nJ = 0.0;   // -ln(0.9)/6.25
    double phonon_half_life_ps = 3.5;
    double phonon_freq_THz = 40.0;
    double detuning_THz = 950.0;
    double absorption_fwhm_fs = 326.0;
};

struct NoiseConfig {
    double temperature_K = 295.0;
    /// Thermal anti-Stokes coincidence rate at the reference temperature
    /// (kReferenceTemperatureK); rescaled by the Bose-Einstein occupation.
    double thermal_coinc_cps = 5.0;
    double fwm_coinc_cps = 0.0;  // calibrated residual
    double noise_g2 = 2.0;
    bool thermal_enabled = true;
    bool fwm_enabled = true;
    /// Noise-rate multiplier applied at the g2 (HBT) operating point.
    double hbt_noise_scale = 1.0;  // calibrated
};

struct DetectorConfig {
    double efficiency = 0.5;
    double dark_cps = 100.0;
    double jitter_fwhm_ps = 500.0;
    double dead_time_ns = 50.0;

    double jitter_sigma_ps() const;
};

struct DetectorSet {
    DetectorConfig herald;
    DetectorConfig signal1;
    DetectorConfig signal2;

    const DetectorConfig& operator[](Channel c) const;
    DetectorConfig& operator[](Channel c);
};

struct CoincidenceConfig {
    double window_ps = 1000.0;
    double histogram_bin_ps = 156.0;
    /// Half-width of the electronic-delay histogram range.
    double delay_range_ns = 40.0;
    double electronic_delay_ps = 0.0;
};

struct ExperimentConfig {
    LaserConfig laser;
    SourceConfig source;
    MemoryConfig memory;
    NoiseConfig noise;
    DetectorSet detectors;
    CoincidenceConfig coincidence;
    double storage_time_ps = 0.5;
    /// Observed herald registration probability per pulse; authoritative when > 0.
    double herald_click_prob_per_pulse = 0.0;  // calibrated
    std::uint64_t seed = 1;
    std::string scenario = "custom";
    Stage stage = Stage::memory_output;
    bool input_blocked = false;

    bool operator==(const ExperimentConfig&) const;
};

/// Temperature at which NoiseConfig::thermal_coinc_cps is quoted.
inline constexpr double kReferenceTemperatureK = 295.0;
/// Coincidence window at which the calibrated noise and signal rates are quoted.
inline constexpr double kReferenceWindowPs = 1000.0;

/// The calibrated laboratory configuration.
ExperimentConfig default_config();

/// Throws ConfigError naming the first offending key.
void validate(const ExperimentConfig& cfg);

/// Parses a flat `key = value` document; absent keys keep their defaults.
/// Throws ParseError (with line number) or ConfigError.
ExperimentConfig load_config(std::string_view text);
ExperimentConfig load_config_file(const std::string& path);

/// Inverse of load_config: every key, shortest round-trip number formatting.
std::string render(const ExperimentConfig& cfg);

}  // namespace qmem
