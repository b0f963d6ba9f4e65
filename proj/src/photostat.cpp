#include "qmem/photostat.hpp"

#include "qmem/errors.hpp"
#include "qmem/memory.hpp"
#include "roots.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qmem::photostat {

namespace {

double log_choose(double n, double k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

/// Binomial pmf row b[k] = C(n,k) p^k (1-p)^(n-k), k = 0..n.
std::vector<double> binomial_row(int n, double p) {
    std::vector<double> row(static_cast<std::size_t>(n) + 1, 0.0);
    if (p <= 0.0) {
        row[0] = 1.0;
    } else if (p >= 1.0) {
        row.back() = 1.0;
    } else {
        const double lq = std::log1p(-p);
        const double odds = p / (1.0 - p);
        if (n * lq > -600.0) {
            double b = std::exp(n * lq);
            for (int k = 0; k <= n; ++k) {
                row[static_cast<std::size_t>(k)] = b;
                b *= odds * (n - k) / (k + 1);
            }
        } else {
            const double lp = std::log(p);
            for (int k = 0; k <= n; ++k) row[static_cast<std::size_t>(k)] = std::exp(log_choose(n, k) + k * lp + (n - k) * lq);
        }
    }
    return row;
}

/// 1 - (1 - a)^n without cancellation.
double at_least_one(int n, double a) {
    if (n == 0 || a <= 0.0) return 0.0;
    if (a >= 1.0) return 1.0;
    return -std::expm1(n * std::log1p(-a));
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// P(|X - delay| <= half) for X ~ N(0, sigma).
double window_capture(double sigma, double half, double delay) {
    if (sigma <= 0.0) return std::abs(delay) <= half ? 1.0 : 0.0;
    return std_normal_cdf((half - delay) / sigma) - std_normal_cdf((-half - delay) / sigma);
}

/// Both signal tags within the window of a jittered herald tag.
double triple_capture(double sigma_h, double sigma_1, double sigma_2, double half, double delay) {
    auto arm = [&](double x, double sigma) {
        // Signal tag t_k must satisfy |t_k - x - delay| <= half.
        return window_capture(sigma, half, -(x + delay));
    };
    if (sigma_h <= 0.0) return arm(0.0, sigma_1) * arm(0.0, sigma_2);
    constexpr int kIntervals = 800;
    const double lo = -12.0 * sigma_h;
    const double step = 24.0 * sigma_h / kIntervals;
    double sum = 0.0;
    for (int i = 0; i <= kIntervals; ++i) {
        const double x = lo + i * step;
        const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double density = std::exp(-0.5 * (x / sigma_h) * (x / sigma_h)) / (sigma_h * std::sqrt(2.0 * M_PI));
        sum += w * density * arm(x, sigma_1) * arm(x, sigma_2);
    }
    return sum * step / 3.0;
}

/// P(|U1 - U2 - delay| <= half) for independent uniforms on [0, period).
double uniform_pair_capture(double period, double half, double delay) {
    auto cdf = [period](double x) {
        if (x <= -period) return 0.0;
        if (x < 0.0) return (period + x) * (period + x) / (2.0 * period * period);
        if (x < period) return 1.0 - (period - x) * (period - x) / (2.0 * period * period);
        return 1.0;
    };
    return cdf(delay + half) - cdf(delay - half);
}

/// Expected number of pulses blocked after a registration (non-paralyzable),
/// for photon clicks centred in each period with Gaussian jitter.
double dead_pulses(double dead_fs, double period_fs, double sigma_fs) {
    if (dead_fs <= 0.0) return 0.0;
    const int kmax = static_cast<int>(std::ceil(dead_fs / period_fs)) + 12;
    double d = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const double gap = dead_fs - k * period_fs;
        if (sigma_fs <= 0.0) {
            d += gap > 0.0 ? 1.0 : 0.0;
        } else {
            d += std_normal_cdf(gap / (std::sqrt(2.0) * sigma_fs));
        }
    }
    return d;
}

/// Photon-only joint click probabilities (no darks, no timing, no dead time).
struct PhotonClicks {
    double h = 0.0, s1 = 0.0, s2 = 0.0;
    double h1 = 0.0, h2 = 0.0, s12 = 0.0, h12 = 0.0;
};

PhotonClicks enumerate_clicks(const ResolvedModel& m) {
    const double a1 = m.arm_eff[0];
    const double a2 = m.arm_eff[1];
    const int n_pairs = m.pairs.n_max();
    const int n_noise = m.noise.n_max();
    const int n_total = n_pairs + n_noise;

    // Click probabilities given N photons at the splitter input.
    std::vector<double> c1(static_cast<std::size_t>(n_total) + 1), c2(c1.size()), c12(c1.size());
    const double a2_given_not1 = a1 < 1.0 ? std::min(1.0, a2 / (1.0 - a1)) : 0.0;
    const double log_miss2 = std::log1p(-a2_given_not1);
    for (int N = 0; N <= n_total; ++N) {
        const auto i = static_cast<std::size_t>(N);
        c1[i] = at_least_one(N, a1);
        c2[i] = at_least_one(N, a2);
        if (N >= 2 && a1 > 0.0 && a2 > 0.0) {
            const auto row = binomial_row(N, a1);
            double both = 0.0;
            for (int k1 = 1; k1 < N; ++k1) both += row[static_cast<std::size_t>(k1)] * -std::expm1((N - k1) * log_miss2);
            c12[i] = both;
        }
    }

    PhotonClicks out;
    const auto noise = m.noise.probs();
    std::vector<double> arriving(static_cast<std::size_t>(n_total) + 1);
    for (int n = 0; n <= n_pairs; ++n) {
        const double pn = m.pairs[n];
        if (pn == 0.0) continue;
        const auto signal = binomial_row(n, m.signal_transfer);
        std::fill(arriving.begin(), arriving.end(), 0.0);
        for (int k = 0; k <= n; ++k) {
            for (int j = 0; j <= n_noise; ++j) arriving[static_cast<std::size_t>(k + j)] += signal[static_cast<std::size_t>(k)] * noise[static_cast<std::size_t>(j)];
        }
        double s1 = 0.0, s2 = 0.0, s12 = 0.0;
        for (int N = 0; N <= n + n_noise; ++N) {
            const auto i = static_cast<std::size_t>(N);
            s1 += arriving[i] * c1[i];
            s2 += arriving[i] * c2[i];
            s12 += arriving[i] * c12[i];
        }
        const double herald = at_least_one(n, m.herald_eff);
        out.h += pn * herald;
        out.s1 += pn * s1;
        out.s2 += pn * s2;
        out.s12 += pn * s12;
        out.h1 += pn * herald * s1;
        out.h2 += pn * herald * s2;
        out.h12 += pn * herald * s12;
    }
    return out;
}

double herald_click_prob(const PhotonNumberDist& pairs, double herald_eff) {
    double p = 0.0;
    for (int n = 1; n <= pairs.n_max(); ++n) p += pairs[n] * at_least_one(n, herald_eff);
    return p;
}

double solve_herald_eff(const ResolvedModel& m, double anchor, double detector_eff) {
    const double dead = dead_pulses(m.dead_time_fs[0], m.period_fs, m.jitter_sigma_fs[0]);
    if (dead * anchor >= 1.0) throw InfeasibleError("herald anchor exceeds the dead-time limited rate");
    const double raw = anchor / (1.0 - dead * anchor);
    // raw = 1 - (1 - photon) exp(-dark)
    const double photon = 1.0 - (1.0 - raw) * std::exp(m.dark_mean[0]);
    if (photon <= 0.0) return 0.0;
    if (herald_click_prob(m.pairs, detector_eff) < photon) {
        throw InfeasibleError("herald_click_prob_per_pulse unattainable with the configured source and detector");
    }
    return detail::find_root([&](double eta) { return herald_click_prob(m.pairs, eta) - photon; }, 0.0, detector_eff);
}

}  // namespace

PhotonNumberDist::PhotonNumberDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw DomainError("photon-number distribution must be non-empty");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("photon-number probabilities must lie in [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("photon-number distribution not normalized");
}

PhotonNumberDist PhotonNumberDist::point_mass(int n) {
    if (n < 0) throw DomainError("photon number must be >= 0");
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    p.back() = 1.0;
    return PhotonNumberDist(std::move(p));
}

double PhotonNumberDist::mean() const { return factorial_moment(1); }

double PhotonNumberDist::variance() const {
    const double m = mean();
    return factorial_moment(2) + m - m * m;
}

double PhotonNumberDist::factorial_moment(int k) const {
    double sum = 0.0;
    for (int n = k; n <= n_max(); ++n) {
        double falling = 1.0;
        for (int j = 0; j < k; ++j) falling *= n - j;
        sum += probs_[static_cast<std::size_t>(n)] * falling;
    }
    return sum;
}

double PhotonNumberDist::pgf(double z) const {
    double sum = 0.0;
    for (int n = n_max(); n >= 0; --n) sum = sum * z + probs_[static_cast<std::size_t>(n)];
    return sum;
}

PhotonNumberDist pair_distribution(double mu, double K, int n_max) {
    if (!(mu >= 0.0)) throw DomainError("mean photon number must be >= 0");
    if (!(K >= 1.0)) throw DomainError("mode number K must be >= 1");
    if (n_max < 0) throw DomainError("n_max must be >= 0");
    std::vector<double> p(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (mu == 0.0) {
        p[0] = 1.0;
        return PhotonNumberDist(std::move(p));
    }
    if (std::isinf(K)) {
        p[0] = std::exp(-mu);
        for (int n = 0; n < n_max; ++n) p[static_cast<std::size_t>(n) + 1] = p[static_cast<std::size_t>(n)] * mu / (n + 1);
    } else {
        const double x = mu / K;
        const double ratio = x / (1.0 + x);
        p[0] = std::exp(-K * std::log1p(x));
        for (int n = 0; n < n_max; ++n) {
            p[static_cast<std::size_t>(n) + 1] = p[static_cast<std::size_t>(n)] * (n + K) / (n + 1) * ratio;
        }
    }
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (1.0 - sum > kMaxTailMass) {
        throw TruncationError("photon-number tail beyond n_max = " + std::to_string(n_max) + " exceeds 1e-10");
    }
    for (double& v : p) v /= sum;
    return PhotonNumberDist(std::move(p));
}

PhotonNumberDist thin(const PhotonNumberDist& dist, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("transmission must lie in [0,1]");
    if (eta == 1.0) return dist;
    const int n_max = dist.n_max();
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int n = 0; n <= n_max; ++n) {
        if (dist[n] == 0.0) continue;
        const auto row = binomial_row(n, eta);
        for (int m = 0; m <= n; ++m) out[static_cast<std::size_t>(m)] += dist[n] * row[static_cast<std::size_t>(m)];
    }
    return PhotonNumberDist(std::move(out));
}

PhotonNumberDist convolve(const PhotonNumberDist& a, const PhotonNumberDist& b) {
    std::vector<double> out(static_cast<std::size_t>(a.n_max() + b.n_max()) + 1, 0.0);
    for (int i = 0; i <= a.n_max(); ++i) {
        for (int j = 0; j <= b.n_max(); ++j) out[static_cast<std::size_t>(i + j)] += a[i] * b[j];
    }
    return PhotonNumberDist(std::move(out));
}

double factorial_g2(const PhotonNumberDist& dist) {
    const double m = dist.mean();
    if (m == 0.0) throw ZeroDivisionError("g2 of the vacuum is undefined");
    return dist.factorial_moment(2) / (m * m);
}

PhotonNumberDist noise_distribution(double mean, double noise_g2, int n_max) {
    if (!(noise_g2 >= 1.0 && noise_g2 <= 2.0)) throw DomainError("noise g2 must lie in [1,2]");
    const double K = noise_g2 > 1.0 ? 1.0 / (noise_g2 - 1.0) : std::numeric_limits<double>::infinity();
    return pair_distribution(mean, K, n_max);
}

double ChannelRates::g2() const {
    if (probs.h1 <= 0.0 || probs.h2 <= 0.0) throw ZeroDivisionError("an arm coincidence probability vanishes");
    return probs.h12 * probs.herald / (probs.h1 * probs.h2);
}

ChannelProbs channel_probs(const ResolvedModel& m, const DetectionModel& det, double window_ps, double delay_ps) {
    const PhotonClicks ph = enumerate_clicks(m);

    std::array<double, 3> dark_any{};  // >= 1 dark count somewhere in the period
    std::array<double, 3> dark_win{};  // >= 1 dark count inside a window
    double cap_h1 = 1.0, cap_h2 = 1.0, cap_h12 = 1.0, dark_dark = 1.0;
    double omega = 1.0;
    if (det.timing) {
        const double half = 0.5 * window_ps * 1e3;
        const double delay = delay_ps * 1e3;
        const auto& s = m.jitter_sigma_fs;
        cap_h1 = window_capture(std::hypot(s[0], s[1]), half, delay);
        cap_h2 = window_capture(std::hypot(s[0], s[2]), half, delay);
        cap_h12 = triple_capture(s[0], s[1], s[2], half, delay);
        omega = std::min(1.0, 2.0 * half / m.period_fs);
        dark_dark = uniform_pair_capture(m.period_fs, half, delay);
    }
    if (det.dark_counts) {
        for (std::size_t c = 0; c < 3; ++c) {
            dark_any[c] = -std::expm1(-m.dark_mean[c]);
            dark_win[c] = -std::expm1(-m.dark_mean[c] * omega);
        }
    }

    // Raw (pre-dead-time) probabilities, first order in dark counts.
    const double raw_h = ph.h + (1.0 - ph.h) * dark_any[0];
    const double raw_1 = ph.s1 + (1.0 - ph.s1) * dark_any[1];
    const double raw_2 = ph.s2 + (1.0 - ph.s2) * dark_any[2];
    const double raw_h1 = ph.h1 * cap_h1 + ph.h * dark_win[1] + dark_win[0] * ph.s1 + dark_any[0] * dark_any[1] * dark_dark;
    const double raw_h2 = ph.h2 * cap_h2 + ph.h * dark_win[2] + dark_win[0] * ph.s2 + dark_any[0] * dark_any[2] * dark_dark;
    const double raw_h12 = ph.h12 * cap_h12 + ph.h1 * cap_h1 * dark_win[2] + ph.h2 * cap_h2 * dark_win[1] +
                           ph.h * dark_win[1] * dark_win[2] + dark_win[0] * ph.s12;

    std::array<double, 3> live{1.0, 1.0, 1.0};
    if (det.dead_time) {
        const std::array<double, 3> raw{raw_h, raw_1, raw_2};
        for (std::size_t c = 0; c < 3; ++c) {
            live[c] = 1.0 / (1.0 + dead_pulses(m.dead_time_fs[c], m.period_fs, m.jitter_sigma_fs[c]) * raw[c]);
        }
    }

    ChannelProbs out;
    out.herald = raw_h * live[0];
    out.s1 = raw_1 * live[1];
    out.s2 = raw_2 * live[2];
    out.h1 = raw_h1 * live[0] * live[1];
    out.h2 = raw_h2 * live[0] * live[2];
    out.h12 = raw_h12 * live[0] * live[1] * live[2];
    out.hs = out.h1 + out.h2 - out.h12;
    return out;
}

double solve_noise_mean(const ResolvedModel& model, double noise_g2, double target_cps, double delay_ps) {
    if (target_cps <= 0.0) return 0.0;
    ResolvedModel m = model;
    m.signal_transfer = 0.0;
    const int n_max = model.pairs.n_max();
    auto rate = [&](double mean) {
        m.noise = noise_distribution(mean, noise_g2, n_max);
        return channel_probs(m, DetectionModel::full(), kReferenceWindowPs, delay_ps).hs * m.rep_rate_Hz;
    };
    if (rate(0.0) >= target_cps) return 0.0;
    double hi = 1e-6;
    try {
        while (rate(hi) < target_cps) hi *= 2.0;
    } catch (const TruncationError&) {
        throw InfeasibleError("noise rate unattainable within the photon-number cutoff");
    }
    return detail::find_root([&](double mean) { return rate(mean) - target_cps; }, 0.0, hi);
}

ResolvedModel resolve(const ExperimentConfig& cfg, Stage stage, double tau_ps) {
    validate(cfg);
    if (!(tau_ps >= 0.0)) throw DomainError("storage time must be >= 0");
    ResolvedModel m;
    m.pairs = pair_distribution(cfg.source.mean_pairs_mu, cfg.source.schmidt_modes_K, cfg.source.n_max);
    m.stage = stage;
    m.storage_time_ps = tau_ps;
    m.input_blocked = cfg.input_blocked;
    m.period_fs = 1e9 / cfg.laser.rep_rate_MHz;
    m.rep_rate_Hz = cfg.laser.rep_rate_Hz();

    const double period_s = 1.0 / m.rep_rate_Hz;
    for (Channel c : {Channel::herald, Channel::signal1, Channel::signal2}) {
        const auto i = static_cast<std::size_t>(c);
        const auto& d = cfg.detectors[c];
        m.dark_mean[i] = d.dark_cps * period_s;
        m.jitter_sigma_fs[i] = d.jitter_sigma_ps() * 1e3;
        m.dead_time_fs[i] = d.dead_time_ns * 1e6;
    }
    m.arm_eff = {0.5 * cfg.detectors.signal1.efficiency, 0.5 * cfg.detectors.signal2.efficiency};

    const double herald_detector = cfg.detectors.herald.efficiency;
    if (cfg.herald_click_prob_per_pulse > 0.0 && cfg.source.mean_pairs_mu > 0.0) {
        m.herald_eff = solve_herald_eff(m, cfg.herald_click_prob_per_pulse, herald_detector);
    } else {
        m.herald_eff = cfg.source.herald_click_prob_per_pair * herald_detector;
    }

    if (stage == Stage::memory_output && cfg.laser.read_energy_nJ > 0.0) {
        const double target = memory::noise_coinc_cps(cfg.noise, cfg.memory.phonon_freq_THz);
        const double mean = solve_noise_mean(m, cfg.noise.noise_g2, target, cfg.coincidence.electronic_delay_ps);
        m.noise = noise_distribution(mean, cfg.noise.noise_g2, cfg.source.n_max);
    }

    if (cfg.input_blocked) {
        m.signal_transfer = 0.0;
    } else if (stage == Stage::memory_input) {
        m.signal_transfer = cfg.source.signal_heralding_eff;
    } else {
        m.signal_transfer = cfg.source.signal_heralding_eff * memory::end_to_end_efficiency(cfg, tau_ps).end_to_end;
    }
    return m;
}

ChannelRates expected_rates(const ExperimentConfig& cfg, double tau_ps) {
    ResolvedModel m = resolve(cfg, cfg.stage, tau_ps);
    ChannelRates out;
    out.rep_rate_Hz = m.rep_rate_Hz;
    out.storage_time_ps = tau_ps;
    const double window = cfg.coincidence.window_ps;
    const double delay = cfg.coincidence.electronic_delay_ps;
    out.probs = channel_probs(m, DetectionModel::full(), window, delay);
    m.signal_transfer = 0.0;
    out.blocked = channel_probs(m, DetectionModel::full(), window, delay);
    return out;
}

PhotonNumberDist heralded_signal_dist(const ResolvedModel& m) {
    const int n_pairs = m.pairs.n_max();
    const int n_noise = m.noise.n_max();
    std::vector<double> joint(static_cast<std::size_t>(n_pairs + n_noise) + 1, 0.0);
    double p_herald = 0.0;
    for (int n = 1; n <= n_pairs; ++n) {
        const double w = m.pairs[n] * at_least_one(n, m.herald_eff);
        if (w == 0.0) continue;
        p_herald += w;
        const auto signal = binomial_row(n, m.signal_transfer);
        for (int k = 0; k <= n; ++k) {
            for (int j = 0; j <= n_noise; ++j) joint[static_cast<std::size_t>(k + j)] += w * signal[static_cast<std::size_t>(k)] * m.noise[j];
        }
    }
    if (p_herald <= 0.0) throw ZeroDivisionError("herald click probability is zero");
    for (double& v : joint) v /= p_herald;
    // Renormalize away summation roundoff.
    const double sum = std::accumulate(joint.begin(), joint.end(), 0.0);
    for (double& v : joint) v /= sum;
    return PhotonNumberDist(std::move(joint));
}

PhotonNumberDist heralded_signal_dist(const ExperimentConfig& cfg, Stage stage) {
    return heralded_signal_dist(resolve(cfg, stage, cfg.storage_time_ps));
}

double heralded_g2(const ResolvedModel& m) {
    const ChannelProbs p = channel_probs(m, DetectionModel::ideal(), std::numeric_limits<double>::infinity(), 0.0);
    if (p.h1 <= 0.0 || p.h2 <= 0.0) throw ZeroDivisionError("an arm coincidence probability vanishes");
    return p.h12 * p.herald / (p.h1 * p.h2);
}

double heralded_g2(const ExperimentConfig& cfg, Stage stage, double tau_ps) {
    return heralded_g2(resolve(cfg, stage, tau_ps));
}

double g2_from_factorial_moments(const PhotonNumberDist& cond, std::array<double, 2> arm) {
    const int n_max = cond.n_max();
    // Binomial moments E[C(N,k)] = F_k / k!.
    std::vector<double> moment(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int N = 0; N <= n_max; ++N) {
        double choose = 1.0;
        for (int k = 0; k <= N; ++k) {
            moment[static_cast<std::size_t>(k)] += cond[N] * choose;
            choose = choose * (N - k) / (k + 1);
        }
    }
    // 1 - G(1 - x) = sum_k (-1)^(k+1) x^k F_k / k!
    auto click = [&](double x) {
        double sum = 0.0;
        double xk = 1.0;
        for (int k = 1; k <= n_max; ++k) {
            xk *= x;
            sum += (k % 2 == 1 ? 1.0 : -1.0) * xk * moment[static_cast<std::size_t>(k)];
        }
        return sum;
    };
    const double p1 = click(arm[0]);
    const double p2 = click(arm[1]);
    double p12 = 0.0;
    double s = 1.0, x1 = 1.0, x2 = 1.0;
    for (int k = 1; k <= n_max; ++k) {
        s *= arm[0] + arm[1];
        x1 *= arm[0];
        x2 *= arm[1];
        if (k >= 2) p12 += (k % 2 == 0 ? 1.0 : -1.0) * moment[static_cast<std::size_t>(k)] * (s - x1 - x2);
    }
    if (p1 <= 0.0 || p2 <= 0.0) throw ZeroDivisionError("an arm click probability vanishes");
    return p12 / (p1 * p2);
}

double mixture_g2(double r, double g2_signal, double g2_noise) {
    if (!(r >= 0.0)) throw DomainError("signal-to-noise ratio must be >= 0");
    if (std::isinf(r)) return g2_signal;
    return (g2_signal * r * r + 2.0 * r + g2_noise) / ((r + 1.0) * (r + 1.0));
}

double solve_mixture_ratio(double g2, double g2_signal, double g2_noise) {
    // (g2_s - g2) r^2 + 2 (1 - g2) r + (g2_n - g2) = 0
    const double a = g2_signal - g2;
    const double b = 2.0 * (1.0 - g2);
    const double c = g2_noise - g2;
    std::vector<double> roots;
    if (a == 0.0) {
        if (b != 0.0) roots.push_back(-c / b);
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            roots.push_back((-b + sq) / (2.0 * a));
            roots.push_back((-b - sq) / (2.0 * a));
        }
    }
    double best = -1.0;
    for (double r : roots) best = std::max(best, r);
    if (!(best >= 0.0)) throw NoRootError("no non-negative signal-to-noise ratio yields the requested g2");
    return best;
}

}  // namespace qmem::photostat
