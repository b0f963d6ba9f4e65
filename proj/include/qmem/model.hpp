#pragma once

// Efficiency laws and the calibration procedures that turn the quoted
// laboratory numbers into a self-consistent ExperimentConfig.

#include "qmem/config.hpp"

namespace qmem::model {

/// 1 - exp(-kappa E): linear Raman absorption with a physical bound of 1.
double saturating_efficiency(double kappa_per_nJ, double energy_nJ);
double write_efficiency(const MemoryConfig& mem, double energy_nJ);
double read_efficiency(const MemoryConfig& mem, double energy_nJ);

/// Inverts the efficiency law at a measured absorption dip.
double calibrate_write_kappa(double dip_depth, double at_energy_nJ);

struct NoiseCalibration {
    double total_noise_cps = 0.0;
    double fwm_cps = 0.0;
    double signal_cps = 0.0;
};

/// Solves S = snr N and S / heralding_eff = ideal_snr (N - thermal).
NoiseCalibration calibrate_noise_rates(double snr, double thermal_cps, double ideal_snr, double heralding_eff);

/// Mean pairs per pulse for which the heralded g2 at the memory input equals
/// g2_target (bisection on (0, 1]).
double calibrate_source_mu(double g2_target, const ExperimentConfig& cfg);

/// Herald probability per pulse implied by a measured triple-coincidence
/// probability, using P(both arms | herald) at the g2 operating point.
double calibrate_herald_rate(const ExperimentConfig& cfg, double triple_prob_per_pulse);

/// Configuration of the g2 measurement: noise rates scaled by hbt_noise_scale.
ExperimentConfig hbt_operating_point(const ExperimentConfig& cfg);

/// Quoted laboratory numbers that anchor the calibration.
struct CalibrationTargets {
    double dip_depth = 0.20;
    double dip_energy_nJ = 12.5;
    double read_eff = 0.10;
    double read_energy_nJ = 6.25;
    double snr = 3.8;
    double thermal_cps = 5.0;
    double ideal_snr = 70.0;
    double g2_in = 0.04;
    double g2_out = 0.65;
    double operating_tau_ps = 0.5;
    double triple_prob_per_pulse = 1.0 / 60e9;
};

/// Jointly calibrates the source mean, signal detection path, noise rates,
/// g2-point noise scale and herald rate by fixed-point iteration.
ExperimentConfig calibrate_reference_config(ExperimentConfig base, const CalibrationTargets& targets = {});

/// Herald-signal coincidence rates (either arm, configured window) with and
/// without the signal input, at the configuration's stage.
struct ReadoutRates {
    double signal_plus_noise_cps = 0.0;
    double noise_cps = 0.0;
    double signal_cps() const { return signal_plus_noise_cps - noise_cps; }
};
ReadoutRates readout_rates(const ExperimentConfig& cfg, double tau_ps);

}  // namespace qmem::model
