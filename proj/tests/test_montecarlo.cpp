#include "qmem/config.hpp"
#include "qmem/errors.hpp"
#include "qmem/model.hpp"
#include "qmem/montecarlo.hpp"
#include "qmem/photostat.hpp"
#include "qmem/tagstream.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

using namespace qmem;
namespace mc = qmem::montecarlo;
namespace fs = std::filesystem;

namespace {

ExperimentConfig silent() {
    ExperimentConfig c = default_config();
    c.source.mean_pairs_mu = 0.0;
    c.herald_click_prob_per_pulse = 0.0;
    c.noise.thermal_enabled = false;
    c.noise.fwm_enabled = false;
    for (auto ch : {Channel::herald, Channel::signal1, Channel::signal2}) c.detectors[ch].dark_cps = 0.0;
    return c;
}

/// Busy enough that a million pulses give thousands of every coincidence fold.
ExperimentConfig busy() {
    ExperimentConfig c = default_config();
    c.herald_click_prob_per_pulse = 0.0;
    c.source.mean_pairs_mu = 0.05;
    c.source.herald_click_prob_per_pair = 0.8;
    c.source.signal_heralding_eff = 0.8;
    c.stage = Stage::memory_input;
    c.detectors.signal1.efficiency = 0.6;
    c.detectors.signal2.efficiency = 0.6;
    for (auto ch : {Channel::herald, Channel::signal1, Channel::signal2}) c.detectors[ch].dark_cps = 2e4;
    return c;
}

std::string temp_path(const std::string& name) { return (fs::temp_directory_path() / ("qmem_test_" + name)).string(); }

void check_within(double count, double p, double n) {
    const double sd = std::sqrt(n * p * (1.0 - p));
    CHECK(std::abs(count - n * p) <= 4.0 * sd + 1e-9);
}

}  // namespace

TEST_CASE("silent configuration yields nothing") {
    const auto r = mc::simulate(silent(), 200'000, 5, mc::SinkMode::time_tags, 1);
    CHECK(r.tags.empty());
    CHECK(r.tallies.pulses == 200'000);
    CHECK(r.tallies.active_pulses == 0);
    CHECK(r.tallies.singles == std::array<std::uint64_t, 3>{0, 0, 0});
    CHECK(r.tallies.coincidences.n_h == 0);
    CHECK(r.tallies.n_hs == 0);
    CHECK(mc::active_probability(silent()) == 0.0);
    const auto s = mc::simulate_skipping(silent(), 1'000'000, 5, mc::SinkMode::tallies_only, 1);
    CHECK(s.tallies.active_pulses == 0);
}

TEST_CASE("naive and skipping engines are bit-identical") {
    const auto cfg = default_config();
    const auto a = mc::simulate(cfg, 1'000'000, 42, mc::SinkMode::time_tags, 1);
    const auto b = mc::simulate_skipping(cfg, 1'000'000, 42, mc::SinkMode::time_tags, 1);
    CHECK_FALSE(b.skipping_fallback);
    CHECK(a.tallies == b.tallies);
    CHECK(a.tags == b.tags);
    CHECK(a.tallies.active_pulses > 0);

    const auto c = mc::simulate(busy(), 300'000, 9, mc::SinkMode::time_tags, 1);
    const auto d = mc::simulate_skipping(busy(), 300'000, 9, mc::SinkMode::time_tags, 1);
    CHECK(c.tallies == d.tallies);
    CHECK(c.tags == d.tags);
}

TEST_CASE("chunking invariance") {
    const auto cfg = busy();
    const std::uint64_t n = 400'000;
    const auto whole = mc::simulate_range(cfg, mc::Engine::naive, 0, n, 11, mc::SinkMode::time_tags);
    for (auto engine : {mc::Engine::naive, mc::Engine::skipping}) {
        mc::TallySet merged;
        std::vector<TimeTag> tags;
        const std::uint64_t cuts[] = {0, 1, 77'777, 77'778, 250'000, n};
        for (std::size_t k = 0; k + 1 < std::size(cuts); ++k) {
            const auto part = mc::simulate_range(cfg, engine, cuts[k], cuts[k + 1] - cuts[k], 11, mc::SinkMode::time_tags);
            merged.merge(part.tallies);
            tags.insert(tags.end(), part.tags.begin(), part.tags.end());
        }
        CHECK(merged == whole.tallies);
        CHECK(tags == whole.tags);
    }
}

TEST_CASE("merging tallies from different windows is refused") {
    ExperimentConfig narrow = busy();
    narrow.coincidence.window_ps = 500.0;
    auto a = mc::simulate(busy(), 1000, 1, mc::SinkMode::tallies_only, 1).tallies;
    const auto b = mc::simulate(narrow, 1000, 1, mc::SinkMode::tallies_only, 1).tallies;
    CHECK_THROWS_AS(a.merge(b), DomainError);
}

TEST_CASE("worker count does not change results") {
    for (const auto& cfg : {default_config(), busy()}) {
        const auto one = mc::simulate_skipping(cfg, 2'000'000, 3, mc::SinkMode::time_tags, 1);
        const auto eight = mc::simulate_skipping(cfg, 2'000'000, 3, mc::SinkMode::time_tags, 8);
        CHECK(one.tallies == eight.tallies);
        CHECK(one.tags == eight.tags);
    }
}

TEST_CASE("seeds matter") {
    const auto a = mc::simulate(busy(), 100'000, 1, mc::SinkMode::tallies_only, 1);
    const auto b = mc::simulate(busy(), 100'000, 2, mc::SinkMode::tallies_only, 1);
    CHECK_FALSE(a.tallies == b.tallies);
}

TEST_CASE("dead time and per-channel ordering") {
    ExperimentConfig cfg = busy();
    for (auto ch : {Channel::herald, Channel::signal1, Channel::signal2}) cfg.detectors[ch].dark_cps = 3e6;
    cfg.detectors.signal2.dead_time_ns = 120.0;
    const auto r = mc::simulate(cfg, 500'000, 17, mc::SinkMode::time_tags, 1);
    REQUIRE(r.tags.size() > 10'000);
    std::array<std::int64_t, 3> last{-1, -1, -1};
    for (std::size_t i = 0; i < r.tags.size(); ++i) {
        const auto& t = r.tags[i];
        if (i > 0) CHECK(r.tags[i - 1].time_fs <= t.time_fs);
        const auto c = static_cast<std::size_t>(t.channel);
        const auto now = static_cast<std::int64_t>(t.time_fs);
        if (last[c] >= 0) {
            const double dead_fs = cfg.detectors[t.channel].dead_time_ns * 1e6;
            CHECK(static_cast<double>(now - last[c]) >= dead_fs);
        }
        last[c] = now;
        // tag time lies within the pulse period it is attributed to
        CHECK(t.time_fs / cfg.laser.period_fs() == t.pulse_index);
    }
}

TEST_CASE("memory output photons carry the retrieved label") {
    ExperimentConfig out = busy();
    out.stage = Stage::memory_output;
    out.memory.write_kappa_per_nJ = 1.0;
    out.memory.read_kappa_per_nJ = 1.0;
    out.noise.thermal_enabled = false;
    out.noise.fwm_enabled = false;
    const auto r_out = mc::simulate(out, 300'000, 23, mc::SinkMode::time_tags, 1);
    std::size_t retrieved = 0;
    for (const auto& t : r_out.tags) {
        const bool pair_signal = t.channel != Channel::herald && (t.flags & tag_flags::pair_photon);
        CHECK(pair_signal == static_cast<bool>(t.flags & tag_flags::retrieved));
        retrieved += pair_signal ? 1 : 0;
    }
    CHECK(retrieved > 100);

    const auto r_in = mc::simulate(busy(), 300'000, 23, mc::SinkMode::time_tags, 1);
    std::size_t direct = 0;
    for (const auto& t : r_in.tags) {
        CHECK((t.flags & tag_flags::retrieved) == 0);
        direct += (t.channel != Channel::herald && (t.flags & tag_flags::pair_photon)) ? 1 : 0;
    }
    CHECK(direct > 100);
}

TEST_CASE("tallies converge to the analytic engine") {
    const auto cfg = busy();
    const double n = 2e6;
    const auto r = mc::simulate_skipping(cfg, static_cast<std::uint64_t>(n), 31, mc::SinkMode::tallies_only, 4);
    const auto p = photostat::expected_rates(cfg, cfg.storage_time_ps).probs;
    const auto& t = r.tallies;
    check_within(static_cast<double>(t.singles[0]), p.herald, n);
    check_within(static_cast<double>(t.singles[1]), p.s1, n);
    check_within(static_cast<double>(t.singles[2]), p.s2, n);
    check_within(static_cast<double>(t.coincidences.n_h1), p.h1, n);
    check_within(static_cast<double>(t.coincidences.n_h2), p.h2, n);
    check_within(static_cast<double>(t.coincidences.n_h12), p.h12, n);
    check_within(static_cast<double>(t.n_hs), p.hs, n);
    CHECK(t.coincidences.n_h == t.singles[0]);
}

TEST_CASE("skipping falls back when most pulses are active") {
    ExperimentConfig cfg = busy();
    cfg.detectors.herald.dark_cps = 2e7;
    CHECK(mc::active_probability(cfg) > mc::kSkipLimit);
    const auto a = mc::simulate_skipping(cfg, 50'000, 1, mc::SinkMode::tallies_only, 1);
    CHECK(a.skipping_fallback);
    CHECK(a.tallies == mc::simulate(cfg, 50'000, 1, mc::SinkMode::tallies_only, 1).tallies);
}

TEST_CASE("argument and overflow guards") {
    const auto cfg = default_config();
    CHECK_THROWS_AS(mc::simulate(cfg, 0, 1), DomainError);
    const std::uint64_t far = std::numeric_limits<std::uint64_t>::max() / cfg.laser.period_fs();
    CHECK_THROWS_AS(mc::simulate_range(cfg, mc::Engine::skipping, far, 10, 1, mc::SinkMode::time_tags), DomainError);
    CHECK_NOTHROW(mc::simulate_range(cfg, mc::Engine::skipping, far, 10, 1, mc::SinkMode::tallies_only));
}

TEST_CASE("QMEM_WORKERS") {
    ::setenv("QMEM_WORKERS", "3", 1);
    CHECK(mc::workers_from_env() == 3);
    ::setenv("QMEM_WORKERS", "zero", 1);
    CHECK_THROWS_AS(mc::workers_from_env(), ConfigError);
    ::setenv("QMEM_WORKERS", "0", 1);
    CHECK_THROWS_AS(mc::workers_from_env(), ConfigError);
    ::unsetenv("QMEM_WORKERS");
    CHECK(mc::workers_from_env() == 1);
}

TEST_CASE("time-tag files") {
    const auto cfg = busy();
    const auto r = mc::simulate(cfg, 200'000, 8, mc::SinkMode::time_tags, 1);
    REQUIRE(!r.tags.empty());
    const auto path = temp_path("roundtrip.ptag");
    tagstream::write_tag_stream(r.tags, cfg.laser.period_fs(), path);
    CHECK(fs::file_size(path) == tagstream::kHeaderBytes + tagstream::kRecordBytes * r.tags.size());
    const auto back = tagstream::read_tag_stream(path);
    CHECK(back.rep_period_fs == cfg.laser.period_fs());
    CHECK(back.tags == r.tags);

    const auto empty = temp_path("empty.ptag");
    tagstream::write_tag_stream({}, cfg.laser.period_fs(), empty);
    CHECK(fs::file_size(empty) == 24);
    CHECK(tagstream::read_tag_stream(empty).tags.empty());

    // header layout
    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "PTAG");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    CHECK(version == 1);
    in.close();

    auto corrupt = [&](const std::string& name, auto edit) {
        const auto p = temp_path(name);
        fs::copy_file(path, p, fs::copy_options::overwrite_existing);
        edit(p);
        return p;
    };
    const auto bad_magic = corrupt("magic.ptag", [](const std::string& p) {
        std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
        f.write("PTAX", 4);
    });
    CHECK_THROWS_AS(tagstream::read_tag_stream(bad_magic), FormatError);
    const auto bad_version = corrupt("version.ptag", [](const std::string& p) {
        std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const std::uint32_t v = 2;
        f.write(reinterpret_cast<const char*>(&v), 4);
    });
    CHECK_THROWS_AS(tagstream::read_tag_stream(bad_version), FormatError);
    const auto truncated = corrupt("trunc.ptag", [](const std::string& p) { fs::resize_file(p, fs::file_size(p) - 5); });
    CHECK_THROWS_AS(tagstream::read_tag_stream(truncated), FormatError);
    const auto short_header = corrupt("header.ptag", [](const std::string& p) { fs::resize_file(p, 10); });
    CHECK_THROWS_AS(tagstream::read_tag_stream(short_header), FormatError);

    for (const auto& p : {path, empty, bad_magic, bad_version, truncated, short_header}) fs::remove(p);
}
