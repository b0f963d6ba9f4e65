#pragma once

// Phonon-memory device model: write absorption, phonon retention,
// end-to-end transfer, and thermal-noise primitives.

#include "qmem/config.hpp"

namespace qmem::memory {

enum class Polarization { H, V };

struct MemoryTransfer {
    double eta_write = 0.0;
    double retention = 0.0;
    double eta_read = 0.0;
    double end_to_end = 0.0;
    /// Raman coupling in <100> swaps the polarization of stored light.
    Polarization input_polarization = Polarization::H;
    Polarization output_polarization = Polarization::V;
};

/// Signal transmission vs write-photon delay: a Gaussian dip of depth
/// eta_write(E_write) and FWHM memory.absorption_fwhm_fs.
double absorption_transmission(double delta_t_fs, const ExperimentConfig& cfg);

/// Surviving fraction of the stored excitation, 2^(-tau / half-life).
double retention(double tau_ps, const ExperimentConfig& cfg);

MemoryTransfer end_to_end_efficiency(const ExperimentConfig& cfg, double tau_ps);

/// Bose-Einstein occupation 1 / (exp(h nu / kB T) - 1).
double thermal_occupation(double freq_THz, double temp_K);

/// Configured noise coincidence rate with the thermal part rescaled to
/// noise.temperature_K; zero when both mechanisms are disabled.
double noise_coinc_cps(const NoiseConfig& noise, double phonon_freq_THz);

/// Mean noise photons per read pulse at the beam-splitter input such that the
/// noise-only herald coincidence rate equals noise_coinc_cps().
double noise_mean_per_pulse(const NoiseConfig& noise, const ExperimentConfig& cfg);

}  // namespace qmem::memory
