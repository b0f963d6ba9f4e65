#include "qmem/model.hpp"

#include "qmem/errors.hpp"
#include "qmem/photostat.hpp"
#include "roots.hpp"

#include <cmath>
#include <limits>

namespace qmem::model {

namespace {

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace

double saturating_efficiency(double kappa_per_nJ, double energy_nJ) {
    if (!(energy_nJ >= 0.0)) throw DomainError("pulse energy must be >= 0");
    if (!(kappa_per_nJ >= 0.0)) throw DomainError("kappa must be >= 0");
    return -std::expm1(-kappa_per_nJ * energy_nJ);
}

double write_efficiency(const MemoryConfig& mem, double energy_nJ) {
    return saturating_efficiency(mem.write_kappa_per_nJ, energy_nJ);
}

double read_efficiency(const MemoryConfig& mem, double energy_nJ) {
    return saturating_efficiency(mem.read_kappa_per_nJ, energy_nJ);
}

double calibrate_write_kappa(double dip_depth, double at_energy_nJ) {
    if (!(dip_depth > 0.0 && dip_depth < 1.0)) throw DomainError("dip depth must lie in (0,1)");
    if (!(at_energy_nJ > 0.0)) throw DomainError("energy must be > 0");
    return -std::log1p(-dip_depth) / at_energy_nJ;
}

NoiseCalibration calibrate_noise_rates(double snr, double thermal_cps, double ideal_snr, double heralding_eff) {
    if (!(snr > 0.0) || !(ideal_snr > 0.0)) throw DomainError("snr values must be > 0");
    if (!(heralding_eff > 0.0 && heralding_eff <= 1.0)) throw DomainError("heralding efficiency must lie in (0,1]");
    if (!(thermal_cps >= 0.0)) throw DomainError("thermal rate must be >= 0");
    const double denom = ideal_snr - snr / heralding_eff;
    if (thermal_cps == 0.0 || !(denom > 0.0)) {
        throw InfeasibleError("noise constraints admit no unique positive solution");
    }
    NoiseCalibration out;
    out.total_noise_cps = ideal_snr * thermal_cps / denom;
    out.fwm_cps = out.total_noise_cps - thermal_cps;
    out.signal_cps = snr * out.total_noise_cps;
    return out;
}

double calibrate_source_mu(double g2_target, const ExperimentConfig& cfg) {
    if (!(g2_target > 0.0)) throw DomainError("g2 target must be > 0");
    ExperimentConfig c = cfg;
    // Hold the per-pair herald efficiency fixed while mu varies.
    if (cfg.herald_click_prob_per_pulse > 0.0 && cfg.source.mean_pairs_mu > 0.0) {
        const double eff = photostat::resolve(cfg, Stage::memory_input, 0.0).herald_eff;
        c.source.herald_click_prob_per_pair = eff / cfg.detectors.herald.efficiency;
        c.herald_click_prob_per_pulse = 0.0;
    }
    c.input_blocked = false;
    auto g2_at = [&](double mu) {
        c.source.mean_pairs_mu = mu;
        return photostat::heralded_g2(c, Stage::memory_input, 0.0);
    };
    // Largest mu in (0, 1] whose distribution fits below n_max.
    double hi = 1.0;
    while (true) {
        try {
            (void)photostat::pair_distribution(hi, c.source.schmidt_modes_K, c.source.n_max);
            break;
        } catch (const TruncationError&) {
            hi *= 0.95;
        }
    }
    if (g2_at(hi) < g2_target) throw NoRootError("g2 target unattainable for the configured source");
    return detail::find_root([&](double mu) { return g2_at(mu) - g2_target; }, 0.0, hi, -g2_target, g2_at(hi) - g2_target);
}

ExperimentConfig hbt_operating_point(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.noise.thermal_coinc_cps *= cfg.noise.hbt_noise_scale;
    c.noise.fwm_coinc_cps *= cfg.noise.hbt_noise_scale;
    c.noise.hbt_noise_scale = 1.0;
    c.stage = Stage::memory_output;
    c.input_blocked = false;
    return c;
}

double calibrate_herald_rate(const ExperimentConfig& cfg, double triple_prob_per_pulse) {
    if (!(triple_prob_per_pulse >= 0.0)) throw DomainError("triple probability must be >= 0");
    const auto rates = photostat::expected_rates(hbt_operating_point(cfg), cfg.storage_time_ps);
    if (rates.probs.herald <= 0.0 || rates.probs.h12 <= 0.0) {
        throw DomainError("conditional triple probability is zero");
    }
    return triple_prob_per_pulse / (rates.probs.h12 / rates.probs.herald);
}

ReadoutRates readout_rates(const ExperimentConfig& cfg, double tau_ps) {
    const auto rates = photostat::expected_rates(cfg, tau_ps);
    return {rates.per_second(rates.probs.hs), rates.per_second(rates.blocked.hs)};
}

ExperimentConfig calibrate_reference_config(ExperimentConfig cfg, const CalibrationTargets& t) {
    cfg.memory.write_kappa_per_nJ = calibrate_write_kappa(t.dip_depth, t.dip_energy_nJ);
    cfg.memory.read_kappa_per_nJ = calibrate_write_kappa(t.read_eff, t.read_energy_nJ);
    const auto noise = calibrate_noise_rates(t.snr, t.thermal_cps, t.ideal_snr, cfg.source.signal_heralding_eff);
    cfg.noise.temperature_K = kReferenceTemperatureK;
    cfg.noise.thermal_coinc_cps = t.thermal_cps;
    cfg.noise.fwm_coinc_cps = noise.fwm_cps;
    cfg.noise.thermal_enabled = true;
    cfg.noise.fwm_enabled = true;
    cfg.storage_time_ps = t.operating_tau_ps;
    cfg.stage = Stage::memory_output;
    cfg.input_blocked = false;
    cfg.coincidence.window_ps = kReferenceWindowPs;
    cfg.coincidence.electronic_delay_ps = 0.0;
    if (cfg.source.mean_pairs_mu <= 0.0) cfg.source.mean_pairs_mu = 0.01;
    for (auto* d : {&cfg.detectors.signal1, &cfg.detectors.signal2}) {
        if (d->efficiency <= 0.0) d->efficiency = 0.1;
    }

    // At a fixed herald rate: mu from the input g2, detection efficiency from
    // the signal rate, noise scale from the output g2.
    auto fit_at_anchor = [&](double anchor) {
        ExperimentConfig c = cfg;
        c.herald_click_prob_per_pulse = anchor;
        for (int iter = 0; iter < 100; ++iter) {
            const ExperimentConfig prev = c;
            c.source.mean_pairs_mu = calibrate_source_mu(t.g2_in, c);

            auto signal_excess = [&](double eff) {
                ExperimentConfig trial = c;
                trial.detectors.signal1.efficiency = eff;
                trial.detectors.signal2.efficiency = eff;
                return readout_rates(trial, t.operating_tau_ps).signal_cps() - noise.signal_cps;
            };
            const double excess_at_one = signal_excess(1.0);
            if (excess_at_one < 0.0) throw InfeasibleError("signal rate unattainable with unit detection");
            const double eff = detail::find_root(signal_excess, 0.0, 1.0, -noise.signal_cps, excess_at_one);
            c.detectors.signal1.efficiency = eff;
            c.detectors.signal2.efficiency = eff;

            auto g2_excess = [&](double scale) {
                ExperimentConfig trial = c;
                trial.noise.hbt_noise_scale = scale;
                return photostat::heralded_g2(hbt_operating_point(trial), Stage::memory_output, t.operating_tau_ps) -
                       t.g2_out;
            };
            double hi = 1.0;
            double excess_hi = g2_excess(hi);
            while (excess_hi < 0.0) {
                hi *= 2.0;
                if (hi > 1e6) throw NoRootError("output g2 unattainable by scaling the noise");
                excess_hi = g2_excess(hi);
            }
            c.noise.hbt_noise_scale = detail::find_root(g2_excess, 0.0, hi, g2_excess(0.0), excess_hi);

            if (close(c.source.mean_pairs_mu, prev.source.mean_pairs_mu, 1e-13) &&
                close(eff, prev.detectors.signal1.efficiency, 1e-13) &&
                close(c.noise.hbt_noise_scale, prev.noise.hbt_noise_scale, 1e-13)) {
                return c;
            }
        }
        throw ConvergenceError("calibration at fixed herald rate did not converge");
    };

    // With the signal and noise coincidence rates pinned, the triple rate
    // falls roughly as 1 / herald rate; solve in log space.
    auto log_triple_excess = [&](double log_anchor) {
        const ExperimentConfig c = fit_at_anchor(std::exp(log_anchor));
        const double triple = photostat::expected_rates(hbt_operating_point(c), t.operating_tau_ps).probs.h12;
        return std::log(triple / t.triple_prob_per_pulse);
    };
    double lo = std::log(1e-3);
    double f_lo = log_triple_excess(lo);
    double hi = lo;
    double f_hi = f_lo;
    for (int step = 0; (f_lo > 0.0) == (f_hi > 0.0); ++step) {
        if (step == 40) throw NoRootError("triple rate not bracketed");
        if (f_lo > 0.0) {
            lo = hi;
            f_lo = f_hi;
            hi = lo + std::log(2.0);
            f_hi = log_triple_excess(hi);
        } else {
            hi = lo;
            f_hi = f_lo;
            lo = hi - std::log(2.0);
            f_lo = log_triple_excess(lo);
        }
    }
    const double log_anchor = detail::find_root(log_triple_excess, lo, hi, f_lo, f_hi, 45);
    ExperimentConfig out = fit_at_anchor(std::exp(log_anchor));
    const double eta = photostat::resolve(out, Stage::memory_input, 0.0).herald_eff;
    out.source.herald_click_prob_per_pair = eta / out.detectors.herald.efficiency;
    return out;
}

}  // namespace qmem::model
