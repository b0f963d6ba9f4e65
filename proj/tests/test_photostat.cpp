#include "qmem/config.hpp"
#include "qmem/errors.hpp"
#include "qmem/model.hpp"
#include "qmem/photostat.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

using namespace qmem;
using photostat::PhotonNumberDist;

namespace {

PhotonNumberDist poisson(double mean, int n_max) {
    std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
    double term = std::exp(-mean);
    for (int n = 0; n <= n_max; ++n) {
        p[static_cast<std::size_t>(n)] = term;
        term *= mean / (n + 1);
    }
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
    return PhotonNumberDist(p);
}

double tv_distance(const PhotonNumberDist& a, const PhotonNumberDist& b) {
    double d = 0.0;
    for (int n = 0; n <= std::max(a.n_max(), b.n_max()); ++n) d += std::abs(a[n] - b[n]);
    return 0.5 * d;
}

struct Joint {
    double h = 0, h1 = 0, h2 = 0, h12 = 0;
};

/// Every photon's individual fate enumerated: herald photons click or not,
/// signal and noise photons end in arm 1, arm 2, or nowhere.
Joint brute_force(const photostat::ResolvedModel& m) {
    Joint out;
    const double a1 = m.arm_eff[0], a2 = m.arm_eff[1];
    for (int n = 0; n <= m.pairs.n_max(); ++n) {
        for (int j = 0; j <= m.noise.n_max(); ++j) {
            const double weight = m.pairs[n] * m.noise[j];
            if (weight == 0.0) continue;
            // state: photons left to place, flags so far, probability
            std::function<void(int, int, int, bool, bool, bool, double)> walk =
                [&](int herald_left, int signal_left, int noise_left, bool h, bool c1, bool c2, double p) {
                    if (herald_left > 0) {
                        walk(herald_left - 1, signal_left, noise_left, true, c1, c2, p * m.herald_eff);
                        walk(herald_left - 1, signal_left, noise_left, h, c1, c2, p * (1.0 - m.herald_eff));
                        return;
                    }
                    if (signal_left > 0 || noise_left > 0) {
                        const double t = signal_left > 0 ? m.signal_transfer : 1.0;
                        const int s = signal_left > 0 ? signal_left - 1 : 0;
                        const int q = signal_left > 0 ? noise_left : noise_left - 1;
                        walk(0, s, q, h, true, c2, p * t * a1);
                        walk(0, s, q, h, c1, true, p * t * a2);
                        walk(0, s, q, h, c1, c2, p * (1.0 - t * (a1 + a2)));
                        return;
                    }
                    if (!h) return;
                    out.h += weight * p;
                    if (c1) out.h1 += weight * p;
                    if (c2) out.h2 += weight * p;
                    if (c1 && c2) out.h12 += weight * p;
                };
            walk(n, n, j, false, false, false, 1.0);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("pair_distribution") {
    const auto vac = photostat::pair_distribution(0.0, 1.0);
    CHECK(vac[0] == 1.0);
    CHECK(vac.mean() == 0.0);

    const auto th = photostat::pair_distribution(0.1, 1.0);
    CHECK(th[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
    CHECK(th[1] == doctest::Approx(0.1 / (1.1 * 1.1)).epsilon(1e-14));
    CHECK(th[0] == doctest::Approx(0.9091).epsilon(1e-4));
    CHECK(th[1] == doctest::Approx(0.08264).epsilon(1e-4));
    for (int n = 0; n <= 20; ++n) CHECK(th[n] == doctest::Approx(std::pow(0.1, n) / std::pow(1.1, n + 1)).epsilon(1e-12));
    CHECK(th.mean() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(th.variance() == doctest::Approx(0.1 * 1.1).epsilon(1e-12));

    const auto k3 = photostat::pair_distribution(0.2, 3.0);
    CHECK(k3.mean() == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(k3.variance() == doctest::Approx(0.2 * (1.0 + 0.2 / 3.0)).epsilon(1e-9));

    CHECK(tv_distance(photostat::pair_distribution(0.1, 1e6), poisson(0.1, 20)) < 1e-6);

    CHECK_THROWS_AS(photostat::pair_distribution(0.9, 1.0, 20), TruncationError);
    CHECK_THROWS_AS(photostat::pair_distribution(-0.1, 1.0), DomainError);
    CHECK_THROWS_AS(photostat::pair_distribution(0.1, 0.5), DomainError);
}

TEST_CASE("thin") {
    const auto th = photostat::pair_distribution(0.3, 1.0, 40);
    CHECK(photostat::thin(th, 1.0) == th);
    const auto zero = photostat::thin(th, 0.0);
    CHECK(zero[0] == 1.0);
    CHECK(zero.mean() == 0.0);

    // thermal closure: thermal(mu) thinned by eta is thermal(eta mu)
    const auto thinned = photostat::thin(th, 0.37);
    const double m = 0.3 * 0.37;
    for (int n = 0; n <= 20; ++n) CHECK(thinned[n] == doctest::Approx(std::pow(m, n) / std::pow(1.0 + m, n + 1)).epsilon(1e-10));
    CHECK(thinned.mean() == doctest::Approx(0.37 * th.mean()).epsilon(1e-12));

    for (double a : {0.1, 0.5, 0.93}) {
        for (double b : {0.2, 0.7}) {
            const auto ab = photostat::thin(photostat::thin(th, a), b);
            const auto direct = photostat::thin(th, a * b);
            for (int n = 0; n <= 40; ++n) CHECK(std::abs(ab[n] - direct[n]) < 1e-12);
        }
    }
    CHECK_THROWS_AS(photostat::thin(th, 1.5), DomainError);
}

TEST_CASE("convolve and factorial moments") {
    const auto a = poisson(0.2, 25);
    const auto b = poisson(0.3, 25);
    const auto ab = photostat::convolve(a, b);
    const auto c = poisson(0.5, 50);
    CHECK(tv_distance(ab, c) < 1e-12);

    CHECK(photostat::factorial_g2(photostat::pair_distribution(0.1, 1.0)) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(photostat::factorial_g2(photostat::pair_distribution(0.1, 4.0)) == doctest::Approx(1.25).epsilon(1e-6));
    CHECK(photostat::factorial_g2(poisson(0.1, 20)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(photostat::factorial_g2(PhotonNumberDist::point_mass(1)) == 0.0);
    CHECK_THROWS_AS(photostat::factorial_g2(PhotonNumberDist::point_mass(0)), ZeroDivisionError);
}

TEST_CASE("click-detector g2 limits") {
    // unheralded thermal field, weak detection: click g2 approaches 2
    const auto th = photostat::pair_distribution(0.1, 1.0);
    CHECK(photostat::g2_from_factorial_moments(th, {1e-5, 1e-5}) == doctest::Approx(2.0).epsilon(1e-4));
    // coherent light factorizes exactly for click detectors
    CHECK(photostat::g2_from_factorial_moments(poisson(0.1, 20), {0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(photostat::g2_from_factorial_moments(poisson(0.4, 25), {0.3, 0.6}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(photostat::g2_from_factorial_moments(PhotonNumberDist::point_mass(1), {0.5, 0.5}) == 0.0);
}

TEST_CASE("heralded distribution of a perfect source") {
    photostat::ResolvedModel m;
    m.pairs = PhotonNumberDist::point_mass(1);
    m.herald_eff = 1.0;
    m.signal_transfer = 1.0;
    m.arm_eff = {0.5, 0.5};
    const auto d = photostat::heralded_signal_dist(m);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == 1.0);
    CHECK(photostat::heralded_g2(m) == 0.0);

    m.pairs = photostat::pair_distribution(0.0, 1.0);
    CHECK_THROWS_AS(photostat::heralded_signal_dist(m), ZeroDivisionError);
}

TEST_CASE("heralded g2 vanishes in the single-pair limit") {
    photostat::ResolvedModel m;
    m.herald_eff = 0.5;
    m.signal_transfer = 0.4;
    m.arm_eff = {0.25, 0.25};
    double last = 1.0;
    for (double mu : {1e-2, 1e-3, 1e-4, 1e-5}) {
        m.pairs = photostat::pair_distribution(mu, 1.0);
        const double g2 = photostat::heralded_g2(m);
        CHECK(g2 < last);
        last = g2;
    }
    CHECK(last < 1e-4);
}

TEST_CASE("channel probabilities match a brute-force joint-outcome sum") {
    photostat::ResolvedModel m;
    m.pairs = photostat::pair_distribution(0.012, 1.0, 5);
    m.noise = photostat::noise_distribution(0.004, 2.0, 5);
    m.herald_eff = 0.47;
    m.signal_transfer = 0.16 * 0.0085;
    m.arm_eff = {0.046, 0.051};

    const auto bf = brute_force(m);
    const auto p = photostat::channel_probs(m, photostat::DetectionModel::ideal(), 1e300, 0.0);
    CHECK(p.herald == doctest::Approx(bf.h).epsilon(1e-12));
    CHECK(p.h1 == doctest::Approx(bf.h1).epsilon(1e-11));
    CHECK(p.h2 == doctest::Approx(bf.h2).epsilon(1e-11));
    CHECK(p.h12 == doctest::Approx(bf.h12).epsilon(1e-10));
    const double g2_bf = bf.h12 * bf.h / (bf.h1 * bf.h2);
    CHECK(photostat::heralded_g2(m) == doctest::Approx(g2_bf).epsilon(1e-10));
}

TEST_CASE("the two g2 routes agree") {
    const auto cfg = default_config();
    const auto hbt = model::hbt_operating_point(cfg);
    for (double tau : {0.0, 0.5, 2.0, 5.0}) {
        const auto m = photostat::resolve(hbt, Stage::memory_output, tau);
        const double eq1 = photostat::heralded_g2(m);
        const double fm = photostat::g2_from_factorial_moments(photostat::heralded_signal_dist(m), m.arm_eff);
        CHECK(std::abs(eq1 - fm) < 1e-9);
    }
    const auto in = photostat::resolve(cfg, Stage::memory_input, 0.0);
    CHECK(std::abs(photostat::heralded_g2(in) -
                   photostat::g2_from_factorial_moments(photostat::heralded_signal_dist(in), in.arm_eff)) < 1e-9);
}

TEST_CASE("calibrated g2 values") {
    const auto cfg = default_config();
    CHECK(photostat::heralded_g2(cfg, Stage::memory_input, 0.0) == doctest::Approx(0.04).epsilon(1e-6));
    const auto hbt = model::hbt_operating_point(cfg);
    CHECK(photostat::heralded_g2(hbt, Stage::memory_output, 0.5) == doctest::Approx(0.65).epsilon(1e-6));

    double last = 0.0;
    for (double tau = 0.0; tau <= 12.0; tau += 0.25) {
        const double g2 = photostat::heralded_g2(hbt, Stage::memory_output, tau);
        CHECK(g2 >= last);
        last = g2;
    }
}

TEST_CASE("mixture_g2") {
    CHECK(photostat::mixture_g2(0.0, 0.04, 2.0) == 2.0);
    CHECK(photostat::mixture_g2(1e12, 0.04, 2.0) == doctest::Approx(0.04).epsilon(1e-9));
    CHECK(photostat::mixture_g2(INFINITY, 0.04, 2.0) == 0.04);
    const double r = photostat::solve_mixture_ratio(0.65, 0.04, 2.0);
    CHECK(r == doctest::Approx(2.168).epsilon(1e-3));
    CHECK(0.61 * r * r - 0.7 * r - 1.35 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(photostat::mixture_g2(r, 0.04, 2.0) == doctest::Approx(0.65).epsilon(1e-12));
    CHECK_THROWS_AS(photostat::mixture_g2(-1.0, 0.04, 2.0), DomainError);
}

TEST_CASE("mixture_g2 agrees with an explicit signal plus noise field") {
    photostat::ResolvedModel m;
    m.herald_eff = 0.5;
    m.signal_transfer = 0.01;
    m.arm_eff = {0.05, 0.05};
    for (double mu : {1e-3, 1e-2}) {
        for (double noise_mean : {1e-3, 5e-3, 1e-2}) {
            m.pairs = photostat::pair_distribution(mu, 1.0);
            m.noise = PhotonNumberDist();
            const auto signal = photostat::heralded_signal_dist(m);
            const double g2_s = photostat::factorial_g2(signal);
            const double r = signal.mean() / noise_mean;
            m.noise = photostat::noise_distribution(noise_mean, 2.0, 20);
            CHECK(std::abs(photostat::heralded_g2(m) - photostat::mixture_g2(r, g2_s, 2.0)) < 1e-3);
        }
    }
}

TEST_CASE("expected rates") {
    ExperimentConfig dark = default_config();
    dark.source.mean_pairs_mu = 0.0;
    dark.noise.thermal_enabled = false;
    dark.noise.fwm_enabled = false;
    for (auto c : {Channel::herald, Channel::signal1, Channel::signal2}) dark.detectors[c].dark_cps = 0.0;
    const auto z = photostat::expected_rates(dark, 0.5);
    CHECK(z.probs.herald == 0.0);
    CHECK(z.probs.s1 == 0.0);
    CHECK(z.probs.s2 == 0.0);
    CHECK(z.probs.h12 == 0.0);
    CHECK(z.blocked.hs == 0.0);

    const auto cfg = default_config();
    const auto r = photostat::expected_rates(cfg, 0.5);
    CHECK(r.probs.h12 <= std::min(r.probs.h1, r.probs.h2));
    CHECK(std::min(r.probs.h1, r.probs.h2) <= r.probs.herald);
    const double noise = r.per_second(r.blocked.hs);
    const double signal = r.per_second(r.probs.hs) - noise;
    CHECK(signal / noise == doctest::Approx(3.8).epsilon(1e-3 / 3.8));

    const auto later = photostat::expected_rates(cfg, 0.5 + 3.5);
    const double noise_later = later.per_second(later.blocked.hs);
    const double signal_later = later.per_second(later.probs.hs) - noise_later;
    CHECK(signal_later / signal == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(noise_later == doctest::Approx(noise).epsilon(1e-12));
}

TEST_CASE("noise distribution") {
    const auto th = photostat::noise_distribution(0.05, 2.0, 20);
    CHECK(th.mean() == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(photostat::factorial_g2(th) == doctest::Approx(2.0).epsilon(1e-6));
    const auto po = photostat::noise_distribution(0.05, 1.0, 20);
    CHECK(photostat::factorial_g2(po) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(photostat::noise_distribution(0.05, 2.5, 20), DomainError);
}
