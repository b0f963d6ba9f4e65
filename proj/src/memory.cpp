#include "qmem/memory.hpp"

#include "qmem/errors.hpp"
#include "qmem/model.hpp"
#include "qmem/photostat.hpp"

#include <cmath>

namespace qmem::memory {

namespace {
constexpr double kPlanck = 6.62607015e-34;
constexpr double kBoltzmann = 1.380649e-23;
}  // namespace

double absorption_transmission(double delta_t_fs, const ExperimentConfig& cfg) {
    if (!std::isfinite(delta_t_fs)) throw DomainError("delay must be finite");
    const double depth = model::write_efficiency(cfg.memory, cfg.laser.write_energy_nJ);
    const double w = cfg.memory.absorption_fwhm_fs;
    return 1.0 - depth * std::exp(-4.0 * std::log(2.0) * delta_t_fs * delta_t_fs / (w * w));
}

double retention(double tau_ps, const ExperimentConfig& cfg) {
    if (!(tau_ps >= 0.0)) throw DomainError("storage time must be >= 0");
    return std::exp2(-tau_ps / cfg.memory.phonon_half_life_ps);
}

MemoryTransfer end_to_end_efficiency(const ExperimentConfig& cfg, double tau_ps) {
    MemoryTransfer t;
    t.eta_write = model::write_efficiency(cfg.memory, cfg.laser.write_energy_nJ);
    t.retention = retention(tau_ps, cfg);
    t.eta_read = model::read_efficiency(cfg.memory, cfg.laser.read_energy_nJ);
    t.end_to_end = t.eta_write * t.retention * t.eta_read;
    return t;
}

double thermal_occupation(double freq_THz, double temp_K) {
    if (!(freq_THz > 0.0)) throw DomainError("phonon frequency must be > 0");
    if (!(temp_K >= 0.0)) throw DomainError("temperature must be >= 0");
    if (temp_K == 0.0) return 0.0;
    const double x = kPlanck * freq_THz * 1e12 / (kBoltzmann * temp_K);
    return 1.0 / std::expm1(x);
}

double noise_coinc_cps(const NoiseConfig& noise, double phonon_freq_THz) {
    double total = 0.0;
    if (noise.thermal_enabled && noise.thermal_coinc_cps > 0.0) {
        total += noise.thermal_coinc_cps * thermal_occupation(phonon_freq_THz, noise.temperature_K) /
                 thermal_occupation(phonon_freq_THz, kReferenceTemperatureK);
    }
    if (noise.fwm_enabled) total += noise.fwm_coinc_cps;
    return total;
}

double noise_mean_per_pulse(const NoiseConfig& noise, const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.noise = noise;
    return photostat::resolve(c, Stage::memory_output, c.storage_time_ps).noise.mean();
}

}  // namespace qmem::memory
