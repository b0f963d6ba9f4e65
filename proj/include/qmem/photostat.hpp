#pragma once

// Exact photon-number algebra and the per-pulse analytic expectation engine.
//
// All detectors are non-number-resolving click detectors. Probabilities are
// evaluated by explicit enumeration over photon number with positive-term
// sums only, so small coincidence probabilities (~1e-11 per pulse) keep full
// relative precision.

#include "qmem/config.hpp"

#include <array>
#include <limits>
#include <span>
#include <vector>

namespace qmem::photostat {

class PhotonNumberDist {
public:
    /// Point mass at zero.
    PhotonNumberDist() : probs_{1.0} {}
    /// Validates entries in [0,1] and normalization to 1e-12.
    explicit PhotonNumberDist(std::vector<double> probs);

    static PhotonNumberDist point_mass(int n);

    int n_max() const { return static_cast<int>(probs_.size()) - 1; }
    double operator[](int n) const { return n >= 0 && n <= n_max() ? probs_[static_cast<std::size_t>(n)] : 0.0; }
    std::span<const double> probs() const { return probs_; }

    double mean() const;
    double variance() const;
    /// E[n (n-1) ... (n-k+1)]
    double factorial_moment(int k) const;
    /// E[z^n]
    double pgf(double z) const;

    bool operator==(const PhotonNumberDist&) const = default;

private:
    std::vector<double> probs_;
};

inline constexpr int kDefaultNMax = 20;
inline constexpr double kMaxTailMass = 1e-10;

/// Negative-binomial (K-mode thermal) law: K = 1 thermal, K = +inf Poisson.
/// Throws TruncationError when the mass beyond n_max exceeds kMaxTailMass.
PhotonNumberDist pair_distribution(double mu, double K, int n_max = kDefaultNMax);

/// Binomial loss channel with transmission eta.
PhotonNumberDist thin(const PhotonNumberDist& dist, double eta);

/// Distribution of the sum of two independent photon numbers.
PhotonNumberDist convolve(const PhotonNumberDist& a, const PhotonNumberDist& b);

/// Normalized second factorial moment F2 / F1^2.
double factorial_g2(const PhotonNumberDist& dist);

/// Which detector non-idealities enter a channel-probability evaluation.
struct DetectionModel {
    bool dark_counts = true;
    bool dead_time = true;
    /// Jitter and finite coincidence window.
    bool timing = true;

    static DetectionModel ideal() { return {false, false, false}; }
    static DetectionModel full() { return {}; }
};

/// Per-pulse physics resolved from a configuration at one storage time.
struct ResolvedModel {
    PhotonNumberDist pairs;
    /// Noise photons per read pulse at the beam-splitter input.
    PhotonNumberDist noise;
    /// Per-pair herald click probability (herald arm and detector).
    double herald_eff = 0.0;
    /// Per-pair probability that the signal photon reaches the beam splitter.
    double signal_transfer = 0.0;
    /// Per-photon click probability in each arm (50:50 split times detector).
    std::array<double, 2> arm_eff{};
    /// Mean dark counts per pulse period: herald, signal1, signal2.
    std::array<double, 3> dark_mean{};
    std::array<double, 3> jitter_sigma_fs{};
    std::array<double, 3> dead_time_fs{};
    double period_fs = 0.0;
    double rep_rate_Hz = 0.0;
    double storage_time_ps = 0.0;
    Stage stage = Stage::memory_output;
    bool input_blocked = false;
};

/// Probabilities per pulse. Coincidences are herald-referenced and pulse-gated.
struct ChannelProbs {
    double herald = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double h12 = 0.0;
    /// Herald coincident with either signal arm.
    double hs = 0.0;
};

struct ChannelRates {
    ChannelProbs probs;
    /// Same channels with the signal input blocked (noise-only).
    ChannelProbs blocked;
    double rep_rate_Hz = 0.0;
    double storage_time_ps = 0.0;

    double per_second(double p) const { return p * rep_rate_Hz; }
    /// Triggered g2 from the four herald-referenced probabilities.
    double g2() const;
};

/// Resolves the configuration at (stage, tau): herald efficiency from the
/// per-pulse anchor, signal transfer through the memory, and the noise mean.
ResolvedModel resolve(const ExperimentConfig& cfg, Stage stage, double tau_ps);

/// Noise mean for which noise-only herald coincidences (reference window)
/// occur at target_cps; `model` supplies everything except the noise.
double solve_noise_mean(const ResolvedModel& model, double noise_g2, double target_cps, double delay_ps);

/// Noise photon-number law with given mean and field g2 in [1,2].
PhotonNumberDist noise_distribution(double mean, double noise_g2, int n_max);

ChannelProbs channel_probs(const ResolvedModel& model, const DetectionModel& detection, double window_ps,
                           double delay_ps);

/// Full detection model at the configured stage, window and delay.
ChannelRates expected_rates(const ExperimentConfig& cfg, double tau_ps);

/// Photon number at the beam-splitter input conditioned on a herald click.
PhotonNumberDist heralded_signal_dist(const ResolvedModel& model);
PhotonNumberDist heralded_signal_dist(const ExperimentConfig& cfg, Stage stage);

/// Triggered g2 (ideal detection) from enumerated channel probabilities.
double heralded_g2(const ResolvedModel& model);
double heralded_g2(const ExperimentConfig& cfg, Stage stage, double tau_ps);

/// Click-detector g2 of a conditional distribution evaluated through its
/// factorial moments; independent of the channel-probability route.
double g2_from_factorial_moments(const PhotonNumberDist& conditional, std::array<double, 2> arm_eff);

/// g2 of an independent signal + noise superposition with mean ratio r.
double mixture_g2(double r, double g2_signal, double g2_noise);
/// Larger root r of mixture_g2(r, g2_signal, g2_noise) = g2.
double solve_mixture_ratio(double g2, double g2_signal, double g2_noise);

}  // namespace qmem::photostat
