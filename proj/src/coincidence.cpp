#include "qmem/coincidence.hpp"

#include "qmem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace qmem::coincidence {

namespace {

std::vector<std::int64_t> channel_times(std::span<const TimeTag> stream, Channel c) {
    std::vector<std::int64_t> out;
    for (const auto& tag : stream) {
        if (tag.channel != c) continue;
        const auto t = static_cast<std::int64_t>(tag.time_fs);
        if (!out.empty() && t < out.back()) throw UnsortedInputError("time tags are not sorted within a channel");
        out.push_back(t);
    }
    return out;
}

/// Greedy matching; matched[i] is set for every tag of `a` that found a partner.
std::uint64_t match(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b, double window_ps,
                    double delay_ps, std::vector<bool>* matched) {
    if (!(window_ps > 0.0)) throw DomainError("coincidence window must be > 0");
    const double half = 0.5 * window_ps * 1e3;
    const double delay = delay_ps * 1e3;
    std::uint64_t count = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double lo = static_cast<double>(a[i]) + delay - half;
        const double hi = static_cast<double>(a[i]) + delay + half;
        while (j < b.size() && static_cast<double>(b[j]) < lo) ++j;
        if (j < b.size() && static_cast<double>(b[j]) <= hi) {
            ++count;
            ++j;
            if (matched) (*matched)[i] = true;
        }
    }
    return count;
}

}  // namespace

G2Estimate g2_from_counts(double n_h, double n_h1, double n_h2, double n_h12) {
    if (n_h < 0.0 || n_h1 < 0.0 || n_h2 < 0.0 || n_h12 < 0.0) throw DomainError("counts must be >= 0");
    if (n_h1 == 0.0 || n_h2 == 0.0) throw ZeroDivisionError("an arm coincidence count is zero");
    G2Estimate g;
    g.value = n_h12 * n_h / (n_h1 * n_h2);
    double rel = 1.0 / n_h1 + 1.0 / n_h2 + (n_h > 0.0 ? 1.0 / n_h : 0.0);
    if (n_h12 > 0.0) {
        rel += 1.0 / n_h12;
    } else {
        g.upper_bound = true;
        g.one_count_limit = n_h / (n_h1 * n_h2);
    }
    g.sigma = g.value * std::sqrt(rel);
    return g;
}

G2Estimate g2_from_counts(const CoincidenceTally& t) {
    return g2_from_counts(static_cast<double>(t.n_h), static_cast<double>(t.n_h1), static_cast<double>(t.n_h2),
                          static_cast<double>(t.n_h12));
}

std::uint64_t count_pairs(std::span<const TimeTag> stream, Channel a, Channel b, double window_ps, double delay_ps) {
    return match(channel_times(stream, a), channel_times(stream, b), window_ps, delay_ps, nullptr);
}

std::uint64_t count_triples(std::span<const TimeTag> stream, double window_ps, double delay_ps) {
    return tally_stream(stream, window_ps, delay_ps).n_h12;
}

CoincidenceTally tally_stream(std::span<const TimeTag> stream, double window_ps, double delay_ps, double duration_s) {
    const auto h = channel_times(stream, Channel::herald);
    const auto s1 = channel_times(stream, Channel::signal1);
    const auto s2 = channel_times(stream, Channel::signal2);
    std::vector<bool> m1(h.size()), m2(h.size());
    CoincidenceTally t;
    t.n_h = h.size();
    t.n_h1 = match(h, s1, window_ps, delay_ps, &m1);
    t.n_h2 = match(h, s2, window_ps, delay_ps, &m2);
    for (std::size_t i = 0; i < h.size(); ++i) t.n_h12 += (m1[i] && m2[i]) ? 1 : 0;
    t.window_ps = window_ps;
    t.electronic_delay_ns = delay_ps * 1e-3;
    t.duration_s = duration_s;
    return t;
}

std::uint64_t DelayHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

DelayHistogram delay_histogram(std::span<const TimeTag> stream, double bin_ps, double range_ns) {
    if (!(bin_ps > 0.0) || !(range_ns > 0.0)) throw DomainError("bin width and range must be > 0");
    const auto h = channel_times(stream, Channel::herald);
    auto s = channel_times(stream, Channel::signal1);
    const auto s2 = channel_times(stream, Channel::signal2);
    s.insert(s.end(), s2.begin(), s2.end());
    std::sort(s.begin(), s.end());

    DelayHistogram hist;
    hist.bin_width_ps = bin_ps;
    const double range_fs = range_ns * 1e6;
    const double bin_fs = bin_ps * 1e3;
    hist.first_bin = static_cast<std::int64_t>(std::floor(-range_fs / bin_fs));
    const auto last_bin = static_cast<std::int64_t>(std::ceil(range_fs / bin_fs)) - 1;
    hist.counts.assign(static_cast<std::size_t>(last_bin - hist.first_bin + 1), 0);

    std::size_t start = 0;
    for (const std::int64_t th : h) {
        while (start < s.size() && static_cast<double>(s[start] - th) < -range_fs) ++start;
        for (std::size_t j = start; j < s.size(); ++j) {
            const double delta = static_cast<double>(s[j] - th);
            if (delta >= range_fs) break;
            const auto bin = static_cast<std::int64_t>(std::floor(delta / bin_fs));
            if (bin < hist.first_bin || bin > last_bin) continue;
            ++hist.counts[static_cast<std::size_t>(bin - hist.first_bin)];
        }
    }
    return hist;
}

double classicality_z(double g2, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
    return (1.0 - g2) / sigma;
}

double snr(double signal_plus_noise_rate, double noise_rate) {
    if (!(noise_rate > 0.0)) throw DomainError("noise rate must be > 0");
    return (signal_plus_noise_rate - noise_rate) / noise_rate;
}

void write_histogram_csv(std::ostream& out, const DelayHistogram& hist) {
    out << "delay_ns,counts\n";
    char buf[64];
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", hist.bin_center_ns(i));
        out << buf << ',' << hist.counts[i] << '\n';
    }
}

void write_tally_csv(std::ostream& out, const CoincidenceTally& t) {
    out << "N_h,N_h1,N_h2,N_h12,g2,sigma\n";
    out << t.n_h << ',' << t.n_h1 << ',' << t.n_h2 << ',' << t.n_h12 << ',';
    if (t.n_h1 == 0 || t.n_h2 == 0) {
        out << "nan,nan\n";
        return;
    }
    const auto g = g2_from_counts(t);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", g.value, g.sigma);
    out << buf;
}

}  // namespace qmem::coincidence
