#include "qmem/scenario.hpp"

#include "qmem/coincidence.hpp"
#include "qmem/errors.hpp"
#include "qmem/memory.hpp"
#include "qmem/model.hpp"
#include "qmem/montecarlo.hpp"
#include "qmem/photostat.hpp"
#include "qmem/rng.hpp"
#include "qmem/tagstream.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace qmem::scenario {

namespace {

using montecarlo::SinkMode;

std::vector<double> arange(double start, double step, double stop) {
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

double rate(std::uint64_t count, const montecarlo::TallySet& t) {
    return static_cast<double>(count) / t.coincidences.duration_s;
}

double rate_err(std::uint64_t count, const montecarlo::TallySet& t) {
    return std::sqrt(static_cast<double>(count)) / t.coincidences.duration_s;
}

/// Evaluates f(i) for every grid index on a worker pool, keeping grid order.
template <class F>
std::vector<std::vector<double>> sweep(std::size_t n, unsigned workers, F&& f) {
    std::vector<std::vector<double>> rows(n);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) rows[i] = f(i);
        return rows;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) rows[i] = f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

montecarlo::SimulationResult run_mc(const ExperimentConfig& cfg, const RunOptions& o, std::uint64_t seed,
                                    SinkMode sink = SinkMode::tallies_only) {
    return montecarlo::simulate_skipping(cfg, o.pulses, seed, sink, o.workers);
}

Table absorption(const ExperimentConfig& base, const RunOptions& o) {
    const ExperimentConfig cfg = scenario_config(base, "fig2_absorption");
    const auto grid = default_grid("fig2_absorption");
    Table t{{"delay_fs", "transmission", "err"}, {}};
    if (o.engine == EngineKind::analytic) {
        for (double d : grid) t.rows.push_back({d, memory::absorption_transmission(d, cfg), 0.0});
        return t;
    }
    // Herald-signal coincidences at the crystal input with the write pulse
    // at each delay, normalized to a run without the write pulse.
    ExperimentConfig ref = cfg;
    ref.stage = Stage::memory_input;
    const auto reference = run_mc(ref, o, rng::derive_seed(o.seed, 0, 1)).tallies;
    const double n_ref = static_cast<double>(reference.n_hs);
    if (n_ref == 0.0) throw ZeroDivisionError("no reference coincidences; increase --pulses");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ExperimentConfig c = ref;
        c.source.signal_heralding_eff *= memory::absorption_transmission(grid[i], cfg);
        const auto tally = run_mc(c, o, rng::derive_seed(o.seed, i, 0)).tallies;
        const double n = static_cast<double>(tally.n_hs);
        const double tr = n / n_ref;
        const double err = n > 0.0 ? tr * std::sqrt(1.0 / n + 1.0 / n_ref) : 1.0 / n_ref;
        t.rows.push_back({grid[i], tr, err});
    }
    return t;
}

Table readout(const ExperimentConfig& base, const RunOptions& o) {
    ExperimentConfig cfg = scenario_config(base, "fig2_readout");
    const auto grid = default_grid("fig2_readout");
    Table t{{"tau_ps", "coinc_cps", "err", "noise_cps", "noise_err"}, {}};
    if (o.engine == EngineKind::analytic) {
        t.rows = sweep(grid.size(), o.workers == 0 ? montecarlo::workers_from_env() : o.workers, [&](std::size_t i) {
            const auto r = model::readout_rates(cfg, grid[i]);
            return std::vector<double>{grid[i], r.signal_plus_noise_cps, 0.0, r.noise_cps, 0.0};
        });
        return t;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ExperimentConfig c = cfg;
        c.storage_time_ps = grid[i];
        const auto with = run_mc(c, o, rng::derive_seed(o.seed, i, 0)).tallies;
        c.input_blocked = true;
        const auto blocked = run_mc(c, o, rng::derive_seed(o.seed, i, 1)).tallies;
        t.rows.push_back({grid[i], rate(with.n_hs, with), rate_err(with.n_hs, with), rate(blocked.n_hs, blocked),
                          rate_err(blocked.n_hs, blocked)});
    }
    return t;
}

Table histogram(const ExperimentConfig& base, const RunOptions& o) {
    const ExperimentConfig cfg = scenario_config(base, "fig3_histogram");
    if (o.engine == EngineKind::analytic) return expected_histogram(cfg, o.pulses > 0 ? o.pulses : 1'000'000'000);
    const auto result = run_mc(cfg, o, rng::derive_seed(o.seed, 0, 0), SinkMode::time_tags);
    if (!o.tags_path.empty()) tagstream::write_tag_stream(result.tags, cfg.laser.period_fs(), o.tags_path);
    const auto hist =
        coincidence::delay_histogram(result.tags, cfg.coincidence.histogram_bin_ps, cfg.coincidence.delay_range_ns);
    Table t{{"delay_ns", "counts"}, {}};
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        t.rows.push_back({hist.bin_center_ns(i), static_cast<double>(hist.counts[i])});
    }
    return t;
}

Table g2_sweep(const ExperimentConfig& base, const RunOptions& o) {
    const ExperimentConfig cfg = scenario_config(base, "fig4_g2");
    const auto grid = default_grid("fig4_g2");
    Table t{{"tau_ps", "g2", "sigma"}, {}};
    if (o.engine == EngineKind::analytic) {
        t.rows = sweep(grid.size(), o.workers == 0 ? montecarlo::workers_from_env() : o.workers, [&](std::size_t i) {
            return std::vector<double>{grid[i], photostat::heralded_g2(cfg, Stage::memory_output, grid[i]), 0.0};
        });
        return t;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ExperimentConfig c = cfg;
        c.storage_time_ps = grid[i];
        const auto tally = run_mc(c, o, rng::derive_seed(o.seed, i, 0)).tallies;
        const auto& k = tally.coincidences;
        double value = std::numeric_limits<double>::quiet_NaN();
        double sigma = value;
        if (k.n_h1 > 0 && k.n_h2 > 0) {
            const auto g = coincidence::g2_from_counts(k);
            value = g.value;
            sigma = g.sigma;
        }
        t.rows.push_back({grid[i], value, sigma});
    }
    return t;
}

Table custom(const ExperimentConfig& cfg, const RunOptions& o) {
    Table t{{"tau_ps", "herald_cps", "s1_cps", "s2_cps", "h1_cps", "h2_cps", "h12_cps", "hs_cps", "g2", "sigma"}, {}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (o.engine == EngineKind::analytic) {
        const auto r = photostat::expected_rates(cfg, cfg.storage_time_ps);
        double g2 = nan;
        if (r.probs.h1 > 0.0 && r.probs.h2 > 0.0) g2 = r.g2();
        const auto& p = r.probs;
        t.rows.push_back({cfg.storage_time_ps, r.per_second(p.herald), r.per_second(p.s1), r.per_second(p.s2),
                          r.per_second(p.h1), r.per_second(p.h2), r.per_second(p.h12), r.per_second(p.hs), g2, 0.0});
        return t;
    }
    const auto sink = o.tags_path.empty() ? SinkMode::tallies_only : SinkMode::time_tags;
    const auto result = run_mc(cfg, o, rng::derive_seed(o.seed, 0, 0), sink);
    if (!o.tags_path.empty()) tagstream::write_tag_stream(result.tags, cfg.laser.period_fs(), o.tags_path);
    const auto& tl = result.tallies;
    const auto& k = tl.coincidences;
    double g2 = nan, sigma = nan;
    if (k.n_h1 > 0 && k.n_h2 > 0) {
        const auto g = coincidence::g2_from_counts(k);
        g2 = g.value;
        sigma = g.sigma;
    }
    t.rows.push_back({cfg.storage_time_ps, rate(tl.singles[0], tl), rate(tl.singles[1], tl), rate(tl.singles[2], tl),
                      rate(k.n_h1, tl), rate(k.n_h2, tl), rate(k.n_h12, tl), rate(tl.n_hs, tl), g2, sigma});
    return t;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

std::string_view to_string(EngineKind engine) { return engine == EngineKind::analytic ? "analytic" : "montecarlo"; }

EngineKind parse_engine(std::string_view name) {
    if (name == "analytic") return EngineKind::analytic;
    if (name == "montecarlo") return EngineKind::montecarlo;
    throw DomainError("unknown engine '" + std::string(name) + "'");
}

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += '\n';
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.10g", row[i]);
            if (i) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DomainError("no column " + name);
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& row : rows) out.push_back(row[idx]);
    return out;
}

std::vector<double> default_grid(std::string_view id) {
    if (id == "fig2_absorption") return arange(-1000.0, 20.0, 1000.0);
    if (id == "fig2_readout") return arange(0.5, 2.0, 14.5);
    if (id == "fig4_g2") return arange(0.5, 0.5, 5.0);
    if (id == "fig3_histogram" || id == "custom") return {};
    throw DomainError("unknown scenario '" + std::string(id) + "'");
}

ExperimentConfig scenario_config(const ExperimentConfig& cfg, std::string_view id) {
    ExperimentConfig c = cfg;
    c.scenario = std::string(id);
    if (id == "fig2_absorption") {
        // The transmission dip is taken with the whole pulse energy in the write pulse.
        c.laser.write_energy_nJ = cfg.laser.write_energy_nJ + cfg.laser.read_energy_nJ;
        c.laser.read_energy_nJ = 0.0;
    } else if (id == "fig2_readout" || id == "fig3_histogram") {
        c.stage = Stage::memory_output;
    } else if (id == "fig4_g2") {
        c = model::hbt_operating_point(c);
    }
    return c;
}

Table run_scenario(const ExperimentConfig& cfg, const RunOptions& o) {
    validate(cfg);
    (void)default_grid(o.scenario);
    if (o.engine == EngineKind::montecarlo && o.pulses < 1) throw DomainError("montecarlo engine requires pulses >= 1");
    if (o.scenario == "fig2_absorption") return absorption(cfg, o);
    if (o.scenario == "fig2_readout") return readout(cfg, o);
    if (o.scenario == "fig3_histogram") return histogram(cfg, o);
    if (o.scenario == "fig4_g2") return g2_sweep(cfg, o);
    return custom(cfg, o);
}

Table expected_histogram(const ExperimentConfig& cfg, std::uint64_t pulses) {
    const auto m = photostat::resolve(cfg, Stage::memory_output, cfg.storage_time_ps);
    const auto p = photostat::channel_probs(m, {false, false, false}, std::numeric_limits<double>::infinity(), 0.0);
    const double period = m.period_fs;
    const double bin = cfg.coincidence.histogram_bin_ps * 1e3;
    const double range = cfg.coincidence.delay_range_ns * 1e6;
    const auto first = static_cast<std::int64_t>(std::floor(-range / bin));
    const auto last = static_cast<std::int64_t>(std::ceil(range / bin)) - 1;
    const auto kmax = static_cast<int>(std::ceil(range / period)) + 1;
    const std::array<double, 2> same{p.h1, p.h2};
    const std::array<double, 2> single{p.s1, p.s2};

    Table t{{"delay_ns", "counts"}, {}};
    for (std::int64_t b = first; b <= last; ++b) {
        const double lo = static_cast<double>(b) * bin;
        const double hi = lo + bin;
        double expected = 0.0;
        for (std::size_t arm = 0; arm < 2; ++arm) {
            const double s = std::hypot(m.jitter_sigma_fs[0], m.jitter_sigma_fs[arm + 1]);
            for (int k = -kmax; k <= kmax; ++k) {
                const double w = k == 0 ? same[arm] : p.herald * single[arm];
                const double c = k * period;
                expected += s > 0.0 ? w * (std_normal_cdf((hi - c) / s) - std_normal_cdf((lo - c) / s))
                                    : (c >= lo && c < hi ? w : 0.0);
            }
            const double lh = m.dark_mean[0];
            const double ls = m.dark_mean[arm + 1];
            expected += (p.herald * ls + lh * single[arm] + lh * ls) * bin / period;
        }
        t.rows.push_back({(lo + 0.5 * bin) * 1e-6, expected * static_cast<double>(pulses)});
    }
    return t;
}

std::string version() { return "1.0.0"; }

std::string manifest_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = "qmem";
    j["version"] = version();
    j["scenario"] = m.options.scenario;
    j["engine"] = std::string(to_string(m.options.engine));
    j["pulses"] = m.options.pulses;
    j["seed"] = m.options.seed;
    j["tags"] = m.options.tags_path;
    j["output"] = m.output;
    j["wall_time_s"] = m.wall_time_s;
    j["config"] = render(m.config);
    return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, std::string("manifest: ") + e.what());
    }
    Manifest m;
    try {
        m.config = load_config(j.at("config").get<std::string>());
        m.options.scenario = j.at("scenario").get<std::string>();
        m.options.engine = parse_engine(j.at("engine").get<std::string>());
        m.options.pulses = j.at("pulses").get<std::uint64_t>();
        m.options.seed = j.at("seed").get<std::uint64_t>();
        m.options.tags_path = j.value("tags", std::string{});
        m.output = j.value("output", std::string{});
        m.wall_time_s = j.value("wall_time_s", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("manifest: ") + e.what());
    }
    return m;
}

}  // namespace qmem::scenario
