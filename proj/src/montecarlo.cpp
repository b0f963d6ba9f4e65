#include "qmem/montecarlo.hpp"

#include "qmem/errors.hpp"
#include "qmem/photostat.hpp"
#include "qmem/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <string>
#include <thread>

namespace qmem::montecarlo {

namespace {

using rng::CounterStream;
using rng::Domain;

double at_least_one(std::size_t n, double q) {
    if (n == 0 || q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    return -std::expm1(static_cast<double>(n) * std::log1p(-q));
}

std::size_t pick(const std::vector<double>& cdf, double u) {
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    return k;
}

std::vector<double> cumulative(std::vector<double> w) {
    double total = 0.0;
    for (double v : w) total += v;
    double run = 0.0;
    for (double& v : w) {
        run += v;
        v = total > 0.0 ? run / total : 1.0;
    }
    if (!w.empty()) w.back() = 1.0;
    return w;
}

/// "At least one of n independent trials fires": sequential conditioning
/// on the first firing trial. first[r] = P(trial fires | >= 1 of r remain).
std::vector<double> first_active_table(std::size_t n_max, double q) {
    std::vector<double> t(n_max + 1, 1.0);
    for (std::size_t r = 1; r <= n_max; ++r) t[r] = q / at_least_one(r, q);
    return t;
}

struct Candidate {
    std::int64_t offset_fs;
    std::uint8_t flags;
};

/// Everything needed to sample one pulse, derived once per configuration.
struct Plan {
    std::int64_t period_fs = 0;
    double p_any = 0.0;
    double threshold_pairs = 0.0;  // u < this: pairs are the first active component
    double threshold_noise = 0.0;

    // Pair outcomes: 0 nothing, 1 h, 2 h&s1, 3 h&s2, 4 s1, 5 s2.
    double pair_q = 0.0;
    std::vector<double> pair_n_active_cdf;  // index n-1
    std::vector<double> pair_first;
    std::vector<double> pair_cat_cdf;         // six outcomes
    std::vector<double> pair_cat_active_cdf;  // outcomes 1..5
    std::uint8_t pair_flag = tag_flags::pair_photon;

    // Noise photons: 0 none, 1 s1, 2 s2.
    double noise_q = 0.0;
    std::vector<double> noise_cdf;
    std::vector<double> noise_m_active_cdf;  // index m-1
    std::vector<double> noise_first;
    std::vector<double> noise_cat_cdf;
    double noise_arm1_given_active = 0.0;

    std::array<double, 3> dark_mean{};
    std::array<double, 3> dark_p0{};  // exp(-dark_mean): below it the Poisson draw is 0
    std::array<double, 3> dark_first{};  // P(channel c has darks | some channel >= c has)

    std::array<double, 3> sigma_fs{};
    std::array<std::int64_t, 3> dead_fs{};
    std::int64_t dead_horizon_pulses = 0;  // pulses after which dead time cannot matter
    double half_window_fs = 0.0;
    double delay_fs = 0.0;
    coincidence::CoincidenceTally tally_template;
};

Plan make_plan(const ExperimentConfig& cfg) {
    const auto m = photostat::resolve(cfg, cfg.stage, cfg.storage_time_ps);
    Plan p;
    p.period_fs = static_cast<std::int64_t>(cfg.laser.period_fs());
    const double a1 = m.arm_eff[0];
    const double a2 = m.arm_eff[1];
    const double z = m.signal_transfer;
    const double eh = m.herald_eff;

    // Pairs.
    const double sig1 = z * a1;
    const double sig2 = z * a2;
    const double sig_none = 1.0 - sig1 - sig2;
    const std::vector<double> cats{(1.0 - eh) * sig_none, eh * sig_none, eh * sig1, eh * sig2, (1.0 - eh) * sig1,
                                   (1.0 - eh) * sig2};
    p.pair_q = 1.0 - cats[0];
    p.pair_cat_cdf = cumulative(cats);
    p.pair_cat_active_cdf = cumulative({cats[1], cats[2], cats[3], cats[4], cats[5]});
    const auto n_pairs = static_cast<std::size_t>(m.pairs.n_max());
    std::vector<double> w;
    double pairs_active = 0.0;
    for (std::size_t n = 1; n <= n_pairs; ++n) {
        w.push_back(m.pairs[static_cast<int>(n)] * at_least_one(n, p.pair_q));
        pairs_active += w.back();
    }
    p.pair_n_active_cdf = cumulative(w);
    p.pair_first = first_active_table(n_pairs, p.pair_q);
    if (m.stage == Stage::memory_output) p.pair_flag |= tag_flags::retrieved;

    // Noise.
    p.noise_q = a1 + a2;
    const auto n_noise = static_cast<std::size_t>(m.noise.n_max());
    std::vector<double> nw, nall;
    double noise_active = 0.0;
    for (std::size_t j = 0; j <= n_noise; ++j) {
        nall.push_back(m.noise[static_cast<int>(j)]);
        if (j == 0) continue;
        nw.push_back(m.noise[static_cast<int>(j)] * at_least_one(j, p.noise_q));
        noise_active += nw.back();
    }
    p.noise_cdf = cumulative(nall);
    p.noise_m_active_cdf = nw.empty() ? std::vector<double>{1.0} : cumulative(nw);
    p.noise_first = first_active_table(std::max<std::size_t>(n_noise, 1), p.noise_q);
    p.noise_cat_cdf = cumulative({1.0 - a1 - a2, a1, a2});
    p.noise_arm1_given_active = p.noise_q > 0.0 ? a1 / p.noise_q : 0.0;

    // Darks.
    double dark_total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        p.dark_mean[c] = m.dark_mean[c];
        p.dark_p0[c] = std::exp(-m.dark_mean[c]);
        dark_total += m.dark_mean[c];
    }
    double tail = dark_total;
    for (std::size_t c = 0; c < 3; ++c) {
        p.dark_first[c] = tail > 0.0 ? -std::expm1(-p.dark_mean[c]) / -std::expm1(-tail) : 0.0;
        tail -= p.dark_mean[c];
    }
    const double darks_active = -std::expm1(-dark_total);

    const double q_a = 1.0 - pairs_active;
    const double q_b = 1.0 - noise_active;
    p.p_any = pairs_active + q_a * noise_active + q_a * q_b * darks_active;
    if (p.p_any > 0.0) {
        p.threshold_pairs = pairs_active / p.p_any;
        p.threshold_noise = (pairs_active + q_a * noise_active) / p.p_any;
    }

    std::int64_t max_dead = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        p.sigma_fs[c] = m.jitter_sigma_fs[c];
        p.dead_fs[c] = std::llround(m.dead_time_fs[c]);
        max_dead = std::max(max_dead, p.dead_fs[c]);
    }
    p.dead_horizon_pulses = max_dead > 0 ? (max_dead + p.period_fs - 1) / p.period_fs + 1 : 0;
    p.half_window_fs = 0.5 * cfg.coincidence.window_ps * 1e3;
    p.delay_fs = cfg.coincidence.electronic_delay_ps * 1e3;
    p.tally_template.window_ps = cfg.coincidence.window_ps;
    p.tally_template.electronic_delay_ns = cfg.coincidence.electronic_delay_ps * 1e-3;
    return p;
}

/// Keyed binary tree deciding which pulses are active. Block b covers pulses
/// [b B, (b+1) B); its event count is Binomial(B, p_any), split recursively
/// between halves by hypergeometric draws.
class ActiveTree {
public:
    ActiveTree(std::uint64_t seed, double p) : seed_(seed), p_(p) {
        if (p_ > 0.0) {
            const int level = static_cast<int>(std::floor(std::log2(16.0 / p_)));
            level_ = std::clamp(level, 0, 24);
        }
        block_ = std::uint64_t{1} << level_;
    }

    bool empty() const { return p_ <= 0.0; }

    bool contains(std::uint64_t i) {
        if (empty()) return false;
        const std::uint64_t b = i >> level_;
        if (b != cached_block_) {
            cached_block_ = b;
            cached_count_ = root_count(b);
        }
        std::uint64_t count = cached_count_;
        std::uint64_t size = block_;
        std::uint64_t base = b << level_;
        std::uint64_t node = 1;
        while (true) {
            if (count == 0) return false;
            if (count == size) return true;
            if (count == 1) return base + single(b, node, size) == i;
            const std::uint64_t half = size / 2;
            const std::uint64_t left = split(b, node, size, count);
            if (i < base + half) {
                count = left;
                node = 2 * node;
            } else {
                count -= left;
                base += half;
                node = 2 * node + 1;
            }
            size = half;
        }
    }

    /// Calls f(i) for every active i in [lo, hi), in increasing order.
    /// f returns false to stop early.
    template <class F>
    bool for_each(std::uint64_t lo, std::uint64_t hi, F&& f) const {
        if (empty() || lo >= hi) return true;
        for (std::uint64_t b = lo >> level_; b <= (hi - 1) >> level_; ++b) {
            if (!visit(b, 1, b << level_, block_, root_count(b), lo, hi, f)) return false;
        }
        return true;
    }

    bool any(std::uint64_t lo, std::uint64_t hi) const {
        bool found = false;
        for_each(lo, hi, [&](std::uint64_t) {
            found = true;
            return false;
        });
        return found;
    }

private:
    std::uint64_t root_count(std::uint64_t b) const {
        return rng::binomial(block_, p_, rng::keyed_uniform(seed_, b, 0, Domain::tree_count));
    }
    std::uint64_t split(std::uint64_t b, std::uint64_t node, std::uint64_t size, std::uint64_t count) const {
        const double u = rng::keyed_uniform(seed_, b, static_cast<std::uint32_t>(node), Domain::tree_count);
        return rng::hypergeometric(size, count, size / 2, u);
    }
    std::uint64_t single(std::uint64_t b, std::uint64_t node, std::uint64_t size) const {
        const double u = rng::keyed_uniform(seed_, b, static_cast<std::uint32_t>(node), Domain::tree_pick);
        return std::min(size - 1, static_cast<std::uint64_t>(u * static_cast<double>(size)));
    }

    template <class F>
    bool visit(std::uint64_t b, std::uint64_t node, std::uint64_t base, std::uint64_t size, std::uint64_t count,
               std::uint64_t lo, std::uint64_t hi, F& f) const {
        if (count == 0 || base >= hi || base + size <= lo) return true;
        if (count == size) {
            for (std::uint64_t i = std::max(base, lo); i < std::min(base + size, hi); ++i) {
                if (!f(i)) return false;
            }
            return true;
        }
        if (count == 1) {
            const std::uint64_t i = base + single(b, node, size);
            return (i < lo || i >= hi) ? true : f(i);
        }
        const std::uint64_t half = size / 2;
        const std::uint64_t left = split(b, node, size, count);
        if (!visit(b, 2 * node, base, half, left, lo, hi, f)) return false;
        return visit(b, 2 * node + 1, base + half, half, count - left, lo, hi, f);
    }

    std::uint64_t seed_;
    double p_;
    int level_ = 0;
    std::uint64_t block_ = 1;
    std::uint64_t cached_block_ = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t cached_count_ = 0;
};

class ChunkRunner {
public:
    ChunkRunner(const Plan& plan, std::uint64_t seed, SinkMode sink) : plan_(plan), seed_(seed), sink_(sink) {
        tallies_.coincidences = plan.tally_template;
    }

    /// Samples an active pulse, applies dead time, and records it if asked.
    void process(std::uint64_t i, bool record) {
        sample(i);
        for (std::size_t c = 0; c < 3; ++c) {
            auto& cand = candidates_[c];
            if (cand.size() > 1) {
                std::sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) { return x.offset_fs < y.offset_fs; });
            }
            auto& reg = registered_[c];
            reg.clear();
            for (const Candidate& x : cand) {
                if (live(c, i, x.offset_fs)) {
                    last_[c] = {true, i, x.offset_fs};
                    reg.push_back(x);
                }
            }
        }
        if (!record) return;
        ++tallies_.active_pulses;
        tally();
        if (sink_ == SinkMode::time_tags) emit(i);
    }

    TallySet& tallies() { return tallies_; }
    std::vector<TimeTag>& tags() { return tags_; }

private:
    struct LastTag {
        bool valid = false;
        std::uint64_t pulse = 0;
        std::int64_t offset_fs = 0;
    };

    bool live(std::size_t c, std::uint64_t i, std::int64_t offset) const {
        const LastTag& l = last_[c];
        if (!l.valid) return true;
        const std::uint64_t gap = i - l.pulse;
        if (gap > static_cast<std::uint64_t>(plan_.dead_horizon_pulses)) return true;
        const std::int64_t delta = static_cast<std::int64_t>(gap) * plan_.period_fs + offset - l.offset_fs;
        return delta >= plan_.dead_fs[c];
    }

    void sample(std::uint64_t i) {
        for (auto& c : candidates_) c.clear();
        CounterStream rs(seed_, i, Domain::pulse);
        std::array<std::uint8_t, 3> photon{};  // flags of photon clicks per channel

        const double u = rs.uniform();
        const int first = u < plan_.threshold_pairs ? 0 : (u < plan_.threshold_noise ? 1 : 2);
        if (first == 0) sample_pairs(rs, photon);
        if (first <= 1) sample_noise(rs, photon, first == 1);
        sample_darks(rs, first == 2);

        for (std::size_t c = 0; c < 3; ++c) {
            if (photon[c] == 0) continue;
            std::int64_t jitter = 0;
            if (plan_.sigma_fs[c] > 0.0) jitter = std::llround(plan_.sigma_fs[c] * rs.normal());
            candidates_[c].push_back({plan_.period_fs / 2 + jitter, photon[c]});
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::uint64_t k = 0; k < dark_counts_[c]; ++k) {
                const auto off = static_cast<std::int64_t>(rs.uniform() * static_cast<double>(plan_.period_fs));
                candidates_[c].push_back({std::min(off, plan_.period_fs - 1), tag_flags::dark});
            }
        }
    }

    void apply_pair(std::size_t outcome, std::array<std::uint8_t, 3>& photon) const {
        const std::uint8_t f = plan_.pair_flag;
        switch (outcome) {
            case 1: photon[0] |= tag_flags::pair_photon; break;
            case 2: photon[0] |= tag_flags::pair_photon; photon[1] |= f; break;
            case 3: photon[0] |= tag_flags::pair_photon; photon[2] |= f; break;
            case 4: photon[1] |= f; break;
            case 5: photon[2] |= f; break;
            default: break;
        }
    }

    void sample_pairs(CounterStream& rs, std::array<std::uint8_t, 3>& photon) const {
        const std::size_t n = pick(plan_.pair_n_active_cdf, rs.uniform()) + 1;
        bool found = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (!found) {
                if (rs.uniform() < plan_.pair_first[n - j]) {
                    found = true;
                    apply_pair(pick(plan_.pair_cat_active_cdf, rs.uniform()) + 1, photon);
                }
            } else {
                apply_pair(pick(plan_.pair_cat_cdf, rs.uniform()), photon);
            }
        }
    }

    void sample_noise(CounterStream& rs, std::array<std::uint8_t, 3>& photon, bool conditioned) const {
        std::size_t m = 0;
        if (conditioned) {
            m = pick(plan_.noise_m_active_cdf, rs.uniform()) + 1;
        } else {
            m = pick(plan_.noise_cdf, rs.uniform());
        }
        bool found = !conditioned;
        for (std::size_t j = 0; j < m; ++j) {
            std::size_t outcome = 0;
            if (!found) {
                if (rs.uniform() < plan_.noise_first[m - j]) {
                    found = true;
                    outcome = rs.uniform() < plan_.noise_arm1_given_active ? 1 : 2;
                }
            } else {
                outcome = pick(plan_.noise_cat_cdf, rs.uniform());
            }
            if (outcome != 0) photon[outcome] |= tag_flags::noise_photon;
        }
    }

    void sample_darks(CounterStream& rs, bool conditioned) {
        bool found = !conditioned;
        for (std::size_t c = 0; c < 3; ++c) {
            const double mean = plan_.dark_mean[c];
            if (!found) {
                if (rs.uniform() < plan_.dark_first[c]) {
                    found = true;
                    dark_counts_[c] = rng::zero_truncated_poisson(mean, rs.uniform());
                } else {
                    dark_counts_[c] = 0;
                }
            } else {
                dark_counts_[c] = 0;
                if (mean > 0.0) {
                    const double u = rs.uniform();
                    if (u >= plan_.dark_p0[c]) dark_counts_[c] = rng::poisson(mean, u);
                }
            }
        }
    }

    void tally() {
        auto& t = tallies_;
        for (std::size_t c = 0; c < 3; ++c) t.singles[c] += registered_[c].size();
        const auto& h = registered_[0];
        t.coincidences.n_h += h.size();
        if (h.empty()) return;
        std::array<std::size_t, 2> next{0, 0};
        for (const Candidate& herald : h) {
            std::array<bool, 2> hit{false, false};
            for (std::size_t arm = 0; arm < 2; ++arm) {
                const auto& s = registered_[arm + 1];
                const double lo = static_cast<double>(herald.offset_fs) + plan_.delay_fs - plan_.half_window_fs;
                const double hi = static_cast<double>(herald.offset_fs) + plan_.delay_fs + plan_.half_window_fs;
                auto& j = next[arm];
                while (j < s.size() && static_cast<double>(s[j].offset_fs) < lo) ++j;
                if (j < s.size() && static_cast<double>(s[j].offset_fs) <= hi) {
                    hit[arm] = true;
                    ++j;
                }
            }
            t.coincidences.n_h1 += hit[0];
            t.coincidences.n_h2 += hit[1];
            t.coincidences.n_h12 += hit[0] && hit[1];
            t.n_hs += hit[0] || hit[1];
        }
    }

    void emit(std::uint64_t i) {
        const std::uint64_t base = i * static_cast<std::uint64_t>(plan_.period_fs);
        const std::size_t start = tags_.size();
        for (std::size_t c = 0; c < 3; ++c) {
            for (const Candidate& x : registered_[c]) {
                tags_.push_back({base + static_cast<std::uint64_t>(x.offset_fs), i, static_cast<Channel>(c), x.flags});
            }
        }
        std::stable_sort(tags_.begin() + static_cast<std::ptrdiff_t>(start), tags_.end(),
                         [](const TimeTag& a, const TimeTag& b) { return a.time_fs < b.time_fs; });
    }

    const Plan& plan_;
    std::uint64_t seed_;
    SinkMode sink_;
    TallySet tallies_;
    std::vector<TimeTag> tags_;
    std::array<std::vector<Candidate>, 3> candidates_;
    std::array<std::vector<Candidate>, 3> registered_;
    std::array<std::uint64_t, 3> dark_counts_{};
    std::array<LastTag, 3> last_{};
};

SimulationResult run_range(const Plan& plan, Engine engine, std::uint64_t first, std::uint64_t count,
                           std::uint64_t seed, SinkMode sink) {
    ActiveTree tree(seed, plan.p_any);
    ChunkRunner runner(plan, seed, sink);

    // Rebuild dead-time state: find K quiet pulses before `first`, replay after.
    if (first > 0 && plan.dead_horizon_pulses > 0 && !tree.empty()) {
        const auto k = static_cast<std::uint64_t>(plan.dead_horizon_pulses);
        std::uint64_t replay_from = 0;
        for (std::uint64_t end = first; end > 0; end = end > k ? end - k : 0) {
            const std::uint64_t begin = end > k ? end - k : 0;
            if (!tree.any(begin, end)) {
                replay_from = end;
                break;
            }
        }
        tree.for_each(replay_from, first, [&](std::uint64_t i) {
            runner.process(i, false);
            return true;
        });
    }

    if (engine == Engine::naive) {
        for (std::uint64_t i = first; i < first + count; ++i) {
            if (tree.contains(i)) runner.process(i, true);
        }
    } else {
        tree.for_each(first, first + count, [&](std::uint64_t i) {
            runner.process(i, true);
            return true;
        });
    }
    SimulationResult out;
    out.tallies = runner.tallies();
    out.tallies.pulses = count;
    out.tallies.coincidences.duration_s = static_cast<double>(count) * static_cast<double>(plan.period_fs) * 1e-15;
    out.tags = std::move(runner.tags());
    return out;
}

void check_time_range(const Plan& plan, std::uint64_t end_pulse, SinkMode sink) {
    if (sink != SinkMode::time_tags) return;
    const auto period = static_cast<std::uint64_t>(plan.period_fs);
    if (end_pulse > std::numeric_limits<std::uint64_t>::max() / period) {
        throw DomainError("pulse range overflows the 64-bit femtosecond clock");
    }
}

SimulationResult run(const ExperimentConfig& cfg, Engine engine, std::uint64_t n_pulses, std::uint64_t seed,
                     SinkMode sink, unsigned workers) {
    if (n_pulses < 1) throw DomainError("n_pulses must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const Plan plan = make_plan(cfg);
    check_time_range(plan, n_pulses, sink);
    if (workers == 0) workers = workers_from_env();
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_pulses));

    std::vector<SimulationResult> parts(workers);
    auto bound = [&](unsigned k) {
        return static_cast<std::uint64_t>(static_cast<unsigned __int128>(n_pulses) * k / workers);
    };
    if (workers == 1) {
        parts[0] = run_range(plan, engine, 0, n_pulses, seed, sink);
    } else {
        std::vector<std::thread> threads;
        for (unsigned k = 0; k < workers; ++k) {
            threads.emplace_back([&, k] { parts[k] = run_range(plan, engine, bound(k), bound(k + 1) - bound(k), seed, sink); });
        }
        for (auto& t : threads) t.join();
    }

    SimulationResult out = std::move(parts[0]);
    for (unsigned k = 1; k < workers; ++k) {
        out.tallies.merge(parts[k].tallies);
        out.tags.insert(out.tags.end(), parts[k].tags.begin(), parts[k].tags.end());
    }
    out.tallies.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

void TallySet::merge(const TallySet& o) {
    if (pulses == 0) {
        coincidences.window_ps = o.coincidences.window_ps;
        coincidences.electronic_delay_ns = o.coincidences.electronic_delay_ns;
    } else if (o.pulses != 0 && (coincidences.window_ps != o.coincidences.window_ps ||
                                 coincidences.electronic_delay_ns != o.coincidences.electronic_delay_ns)) {
        throw DomainError("cannot merge tallies taken with different coincidence windows");
    }
    pulses += o.pulses;
    active_pulses += o.active_pulses;
    for (std::size_t c = 0; c < singles.size(); ++c) singles[c] += o.singles[c];
    coincidences.n_h += o.coincidences.n_h;
    coincidences.n_h1 += o.coincidences.n_h1;
    coincidences.n_h2 += o.coincidences.n_h2;
    coincidences.n_h12 += o.coincidences.n_h12;
    coincidences.duration_s += o.coincidences.duration_s;
    n_hs += o.n_hs;
    wall_time_s += o.wall_time_s;
}

bool TallySet::operator==(const TallySet& o) const {
    return pulses == o.pulses && active_pulses == o.active_pulses && singles == o.singles && n_hs == o.n_hs &&
           coincidences.n_h == o.coincidences.n_h && coincidences.n_h1 == o.coincidences.n_h1 &&
           coincidences.n_h2 == o.coincidences.n_h2 && coincidences.n_h12 == o.coincidences.n_h12 &&
           coincidences.window_ps == o.coincidences.window_ps &&
           coincidences.electronic_delay_ns == o.coincidences.electronic_delay_ns;
}

double active_probability(const ExperimentConfig& cfg) { return make_plan(cfg).p_any; }

unsigned workers_from_env() {
    const char* env = std::getenv("QMEM_WORKERS");
    if (env == nullptr || *env == '\0') return 1;
    try {
        const long v = std::stol(env);
        if (v < 1) throw ConfigError("QMEM_WORKERS", "must be >= 1");
        return static_cast<unsigned>(v);
    } catch (const std::logic_error&) {
        throw ConfigError("QMEM_WORKERS", "not an integer");
    }
}

SimulationResult simulate(const ExperimentConfig& cfg, std::uint64_t n_pulses, std::uint64_t seed, SinkMode sink,
                          unsigned workers) {
    return run(cfg, Engine::naive, n_pulses, seed, sink, workers);
}

SimulationResult simulate_skipping(const ExperimentConfig& cfg, std::uint64_t n_pulses, std::uint64_t seed,
                                   SinkMode sink, unsigned workers) {
    if (active_probability(cfg) > kSkipLimit) {
        std::cerr << "warning: active-pulse probability exceeds " << kSkipLimit
                  << "; skipping is pointless, running the per-pulse engine\n";
        SimulationResult out = run(cfg, Engine::naive, n_pulses, seed, sink, workers);
        out.skipping_fallback = true;
        return out;
    }
    return run(cfg, Engine::skipping, n_pulses, seed, sink, workers);
}

SimulationResult simulate_range(const ExperimentConfig& cfg, Engine engine, std::uint64_t first, std::uint64_t count,
                                std::uint64_t seed, SinkMode sink) {
    if (count < 1) throw DomainError("count must be >= 1");
    const Plan plan = make_plan(cfg);
    check_time_range(plan, first + count, sink);
    return run_range(plan, engine, first, count, seed, sink);
}

}  // namespace qmem::montecarlo
