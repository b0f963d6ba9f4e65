#include "qmem/coincidence.hpp"
#include "qmem/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

using namespace qmem;
using coincidence::count_pairs;

namespace {

TimeTag tag(std::uint64_t t_fs, Channel c) { return TimeTag{t_fs, t_fs / 12'500'000, c, 0}; }

std::vector<TimeTag> merged(std::vector<TimeTag> v) {
    std::stable_sort(v.begin(), v.end(), [](const TimeTag& a, const TimeTag& b) { return a.time_fs < b.time_fs; });
    return v;
}

std::vector<std::uint64_t> poisson_times(std::mt19937_64& gen, double rate_hz, double duration_s) {
    std::exponential_distribution<double> gap(rate_hz);
    std::vector<std::uint64_t> out;
    double t = gap(gen);
    while (t < duration_s) {
        out.push_back(static_cast<std::uint64_t>(t * 1e15));
        t += gap(gen);
    }
    return out;
}

/// Quadratic greedy matcher: each a (in time order) takes the earliest unused b
/// inside the window.
std::uint64_t brute_pairs(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                          std::int64_t window_fs, std::int64_t delay_fs) {
    std::vector<bool> used(b.size(), false);
    std::uint64_t n = 0;
    for (auto ta : a) {
        std::int64_t best = -1;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            const std::int64_t d = static_cast<std::int64_t>(b[j]) - static_cast<std::int64_t>(ta) - delay_fs;
            if (2 * std::abs(d) > window_fs) continue;
            if (best < 0 || b[j] < b[static_cast<std::size_t>(best)]) best = static_cast<std::int64_t>(j);
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            ++n;
        }
    }
    return n;
}

std::vector<TimeTag> as_stream(const std::vector<std::uint64_t>& a, Channel ca, const std::vector<std::uint64_t>& b,
                               Channel cb) {
    std::vector<TimeTag> v;
    for (auto t : a) v.push_back(tag(t, ca));
    for (auto t : b) v.push_back(tag(t, cb));
    return merged(v);
}

}  // namespace

TEST_CASE("count_pairs basic contract") {
    const auto one = merged({tag(1'000'000, Channel::herald), tag(1'000'000, Channel::signal1)});
    CHECK(count_pairs(one, Channel::herald, Channel::signal1, 1000.0) == 1);

    // exactly window / 2 apart counts; one femtosecond more does not
    const auto edge = merged({tag(1'000'000, Channel::herald), tag(1'500'000, Channel::signal1)});
    CHECK(count_pairs(edge, Channel::herald, Channel::signal1, 1000.0) == 1);
    const auto outside = merged({tag(1'000'000, Channel::herald), tag(1'500'001, Channel::signal1)});
    CHECK(count_pairs(outside, Channel::herald, Channel::signal1, 1000.0) == 0);
    const auto before = merged({tag(1'500'000, Channel::herald), tag(1'000'000, Channel::signal1)});
    CHECK(count_pairs(before, Channel::herald, Channel::signal1, 1000.0) == 1);

    // electronic delay shifts the window
    const auto shifted = merged({tag(1'000'000, Channel::herald), tag(13'500'000, Channel::signal1)});
    CHECK(count_pairs(shifted, Channel::herald, Channel::signal1, 1000.0) == 0);
    CHECK(count_pairs(shifted, Channel::herald, Channel::signal1, 1000.0, 12'500.0) == 1);

    // single use: two heralds cannot share one signal tag
    const auto shared = merged({tag(1'000'000, Channel::herald), tag(1'100'000, Channel::herald),
                                tag(1'050'000, Channel::signal1)});
    CHECK(count_pairs(shared, Channel::herald, Channel::signal1, 1000.0) == 1);

    std::vector<TimeTag> unsorted{tag(2'000'000, Channel::herald), tag(1'000'000, Channel::herald)};
    CHECK_THROWS_AS(count_pairs(unsorted, Channel::herald, Channel::signal1, 1000.0), UnsortedInputError);
    CHECK_THROWS_AS(count_pairs(one, Channel::herald, Channel::signal1, 0.0), DomainError);
}

TEST_CASE("two-pointer matcher equals the quadratic matcher") {
    std::mt19937_64 gen(20240611);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<std::uint64_t> when(0, 400'000'000);
        std::uniform_int_distribution<int> size(0, 500);
        std::vector<std::uint64_t> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
        for (auto& t : a) t = when(gen);
        for (auto& t : b) t = when(gen);
        // force some exact-boundary and duplicate cases
        if (!a.empty() && !b.empty()) {
            b[0] = a[0] + 500'000;
            if (b.size() > 1) b[1] = a[0];
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const std::int64_t delay_fs = (trial % 3 - 1) * 300'000;
        const auto stream = as_stream(a, Channel::herald, b, Channel::signal2);
        CHECK(count_pairs(stream, Channel::herald, Channel::signal2, 1000.0, delay_fs * 1e-3) ==
              brute_pairs(a, b, 1'000'000, delay_fs));
    }
}

TEST_CASE("accidental coincidences of Poisson streams") {
    std::mt19937_64 gen(7);
    const double r1 = 1e6, r2 = 1e6, duration = 1.0, window_ps = 1000.0;
    const auto a = poisson_times(gen, r1, duration);
    const auto b = poisson_times(gen, r2, duration);
    const auto stream = as_stream(a, Channel::herald, b, Channel::signal1);
    const double expected = r1 * r2 * window_ps * 1e-12 * duration;
    const double got = static_cast<double>(count_pairs(stream, Channel::herald, Channel::signal1, window_ps));
    CHECK(std::abs(got - expected) < 4.0 * std::sqrt(expected));

    // small-duration cross-check against the quadratic matcher
    const auto sa = poisson_times(gen, r1, 1e-3);
    const auto sb = poisson_times(gen, r2, 1e-3);
    const auto small = as_stream(sa, Channel::herald, sb, Channel::signal1);
    CHECK(count_pairs(small, Channel::herald, Channel::signal1, 1e5) == brute_pairs(sa, sb, 100'000'000, 0));
}

TEST_CASE("count_triples") {
    const auto both = merged({tag(1'000'000, Channel::herald), tag(1'200'000, Channel::signal1),
                              tag(900'000, Channel::signal2)});
    CHECK(coincidence::count_triples(both, 1000.0) == 1);
    const auto one_arm = merged({tag(1'000'000, Channel::herald), tag(1'200'000, Channel::signal1)});
    CHECK(coincidence::count_triples(one_arm, 1000.0) == 0);

    const auto t = coincidence::tally_stream(both, 1000.0, 0.0, 2.5);
    CHECK(t.n_h == 1);
    CHECK(t.n_h1 == 1);
    CHECK(t.n_h2 == 1);
    CHECK(t.n_h12 == 1);
    CHECK(t.duration_s == 2.5);
    CHECK(t.window_ps == 1000.0);
}

TEST_CASE("g2_from_counts") {
    const auto zero = coincidence::g2_from_counts(1e6, 1e3, 1e3, 0.0);
    CHECK(zero.value == 0.0);
    CHECK(zero.upper_bound);
    CHECK(zero.one_count_limit == doctest::Approx(1.0));
    CHECK(zero.sigma == 0.0);

    CHECK(coincidence::g2_from_counts(1e6, 2000, 3000, 6).value == doctest::Approx(1.0).epsilon(1e-15));
    const auto headline = coincidence::g2_from_counts(1e6, 2000, 2000, 2.6);
    CHECK(headline.value == doctest::Approx(0.65).epsilon(1e-15));
    CHECK(headline.sigma ==
          doctest::Approx(0.65 * std::sqrt(1 / 2.6 + 1 / 1e6 + 1 / 2000.0 + 1 / 2000.0)).epsilon(1e-14));

    const auto base = coincidence::g2_from_counts(5e5, 1200, 1100, 40);
    for (double c : {0.5, 3.0, 100.0}) {
        const auto scaled = coincidence::g2_from_counts(5e5 * c, 1200 * c, 1100 * c, 40 * c);
        CHECK(scaled.value == doctest::Approx(base.value).epsilon(1e-14));
        CHECK(scaled.sigma == doctest::Approx(base.sigma / std::sqrt(c)).epsilon(1e-12));
    }

    coincidence::CoincidenceTally t;
    t.n_h = 1000000;
    t.n_h1 = 2000;
    t.n_h2 = 2000;
    t.n_h12 = 3;
    CHECK(coincidence::g2_from_counts(t).value == doctest::Approx(0.75));
    CHECK_THROWS_AS(coincidence::g2_from_counts(1e6, 0, 10, 0), ZeroDivisionError);
}

TEST_CASE("classicality and snr") {
    CHECK(coincidence::classicality_z(0.65, 0.07) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(coincidence::classicality_z(1.0, 0.3) == 0.0);
    CHECK(coincidence::classicality_z(0.04, 0.01) == doctest::Approx(96.0).epsilon(1e-12));
    CHECK_THROWS_AS(coincidence::classicality_z(0.5, 0.0), DomainError);

    CHECK(coincidence::snr(28.757 + 7.5676, 7.5676) == doctest::Approx(3.80).epsilon(1e-3));
    CHECK(coincidence::snr(2.0, 1.0) == 1.0);
    CHECK(coincidence::snr(1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(coincidence::snr(1.0, 0.0), DomainError);
}

TEST_CASE("delay histogram") {
    const auto empty = coincidence::delay_histogram({}, 156.0, 40.0);
    CHECK(empty.total() == 0);
    CHECK(!empty.counts.empty());

    std::mt19937_64 gen(99);
    std::uniform_int_distribution<std::uint64_t> when(0, 2'000'000'000);
    std::vector<std::uint64_t> h(300), s(400);
    for (auto& t : h) t = when(gen);
    for (auto& t : s) t = when(gen);
    std::sort(h.begin(), h.end());
    std::sort(s.begin(), s.end());
    std::vector<TimeTag> v;
    for (auto t : h) v.push_back(tag(t, Channel::herald));
    for (std::size_t i = 0; i < s.size(); ++i) v.push_back(tag(s[i], i % 2 ? Channel::signal1 : Channel::signal2));
    v = merged(v);

    const double range_ns = 40.0, bin_ps = 156.0;
    const auto hist = coincidence::delay_histogram(v, bin_ps, range_ns);
    // every herald-signal pair with delay in [-range, range), by brute force
    std::uint64_t pairs = 0;
    std::vector<std::uint64_t> by_bin(hist.counts.size(), 0);
    for (auto th : h) {
        for (auto ts : s) {
            const double d = static_cast<double>(static_cast<std::int64_t>(ts) - static_cast<std::int64_t>(th));
            if (d < -range_ns * 1e6 || d >= range_ns * 1e6) continue;
            ++pairs;
            const auto k = static_cast<std::int64_t>(std::floor(d / (bin_ps * 1e3)));
            ++by_bin[static_cast<std::size_t>(k - hist.first_bin)];
        }
    }
    CHECK(hist.total() == pairs);
    CHECK(hist.counts == by_bin);
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double start = hist.bin_start_ps(i);
        CHECK(std::abs(start / bin_ps - std::round(start / bin_ps)) < 1e-9);
    }

    std::ostringstream ss;
    coincidence::write_histogram_csv(ss, hist);
    CHECK(ss.str().rfind("delay_ns,counts\n", 0) == 0);
}
