// qmem: scenario runner and time-tag analysis.

#include "qmem/analysis.hpp"
#include "qmem/coincidence.hpp"
#include "qmem/errors.hpp"
#include "qmem/model.hpp"
#include "qmem/scenario.hpp"
#include "qmem/tagstream.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qmem;

struct CliFailure {
    int exit_code;
    std::string code;
    std::string message;
};

[[noreturn]] void fail(int exit_code, std::string code, std::string message) {
    throw CliFailure{exit_code, std::move(code), std::move(message)};
}

/// Integer flags accept plain integers or exact scientific notation (1e9).
std::uint64_t parse_count(const std::string& text, const std::string& flag) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    if (auto [p, ec] = std::from_chars(text.data(), end, v); ec == std::errc{} && p == end) return v;
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(text.data(), end, d); ec == std::errc{} && p == end && d >= 0.0 &&
                                                             d < 0x1.0p64 && std::floor(d) == d) {
        return static_cast<std::uint64_t>(d);
    }
    fail(2, "bad-argument", flag + " expects a non-negative integer, got '" + text + "'");
}

double parse_real(const std::string& text, const std::string& flag) {
    double d = 0.0;
    const auto* end = text.data() + text.size();
    if (auto [p, ec] = std::from_chars(text.data(), end, d); ec == std::errc{} && p == end && std::isfinite(d)) return d;
    fail(2, "bad-argument", flag + " expects a number, got '" + text + "'");
}

void require_file(const std::string& path, const char* missing_code) {
    if (!std::filesystem::exists(path)) fail(2, missing_code, "no such file: " + path);
}

std::string read_file(const std::string& path, const char* missing_code) {
    require_file(path, missing_code);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(1, "io-error", "cannot write " + path);
    out << text;
    if (!out) fail(1, "io-error", "write failed for " + path);
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        write_file(out_path, text);
    }
}

struct RunArgs {
    std::string scenario;
    std::string config;
    std::string engine = "analytic";
    std::string pulses;
    std::string seed;
    std::string out;
    std::string tags;
    std::string manifest;
};

void do_run(const RunArgs& a) {
    scenario::Manifest m;
    if (!a.manifest.empty()) {
        m = scenario::parse_manifest(read_file(a.manifest, "manifest-not-found"));
    } else {
        if (a.scenario.empty()) fail(2, "bad-argument", "--scenario is required");
        m.config = a.config.empty() ? default_config() : load_config(read_file(a.config, "config-not-found"));
        m.options.scenario = a.scenario;
        m.options.engine = scenario::parse_engine(a.engine);
        m.options.seed = a.seed.empty() ? m.config.seed : parse_count(a.seed, "--seed");
        if (!a.pulses.empty()) m.options.pulses = parse_count(a.pulses, "--pulses");
        m.options.tags_path = a.tags;
    }
    if (!a.out.empty()) m.output = a.out;
    if (m.output.empty()) fail(2, "bad-argument", "--out is required");
    if (m.options.engine == scenario::EngineKind::montecarlo && m.options.pulses < 1) {
        fail(2, "bad-argument", "--pulses >= 1 is required for the montecarlo engine");
    }
    m.config.seed = m.options.seed;
    m.config.scenario = m.options.scenario;

    const auto start = std::chrono::steady_clock::now();
    const auto table = scenario::run_scenario(m.config, m.options);
    write_file(m.output, table.to_csv());
    m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(m.output + ".manifest.json", scenario::manifest_json(m));
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Heralded-photon phonon-memory simulator"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Regenerate a figure scenario");
    run_cmd->add_option("--scenario", run.scenario, "fig2_absorption|fig2_readout|fig3_histogram|fig4_g2|custom");
    run_cmd->add_option("--config", run.config, "key = value configuration file");
    run_cmd->add_option("--engine", run.engine, "analytic|montecarlo");
    run_cmd->add_option("--pulses", run.pulses, "pulses per sweep point");
    run_cmd->add_option("--seed", run.seed, "64-bit seed");
    run_cmd->add_option("--out", run.out, "CSV output path");
    run_cmd->add_option("--tags", run.tags, "also write the time-tag stream (montecarlo fig3/custom)");
    run_cmd->add_option("--manifest", run.manifest, "re-run from a manifest");

    auto* analyze = app.add_subcommand("analyze", "Analyze time tags or fit CSV data");
    analyze->require_subcommand(1);
    std::string tags, window = "1000", delay = "0", bin = "156", range = "40", in, out;
    auto* g2 = analyze->add_subcommand("g2", "Triggered g2 from a tag file");
    g2->add_option("--tags", tags)->required();
    g2->add_option("--window-ps", window);
    g2->add_option("--delay-ps", delay);
    g2->add_option("--out", out);
    auto* hist = analyze->add_subcommand("histogram", "Herald-signal delay histogram");
    hist->add_option("--tags", tags)->required();
    hist->add_option("--bin-ps", bin);
    hist->add_option("--range-ns", range);
    hist->add_option("--out", out);
    auto* dip = analyze->add_subcommand("fit-dip", "Gaussian dip fit of (delay_fs, transmission)");
    dip->add_option("--in", in)->required();
    dip->add_option("--out", out);
    auto* decay = analyze->add_subcommand("fit-decay", "Half-life fit of (tau_ps, rate)");
    decay->add_option("--in", in)->required();
    decay->add_option("--out", out);

    auto* calibrate = app.add_subcommand("calibrate", "Re-derive the calibrated configuration");
    std::string base;
    calibrate->add_option("--config", base, "starting configuration");
    calibrate->add_option("--out", out);

    CLI11_PARSE(app, argc, argv);

    if (*run_cmd) {
        do_run(run);
    } else if (*g2) {
        require_file(tags, "tags-not-found");
        const auto file = tagstream::read_tag_stream(tags);
        const double duration = file.tags.empty() ? 0.0 : static_cast<double>(file.tags.back().time_fs) * 1e-15;
        const auto tally = coincidence::tally_stream(file.tags, parse_real(window, "--window-ps"),
                                                     parse_real(delay, "--delay-ps"), duration);
        std::ostringstream ss;
        coincidence::write_tally_csv(ss, tally);
        emit(out, ss.str());
    } else if (*hist) {
        require_file(tags, "tags-not-found");
        const auto file = tagstream::read_tag_stream(tags);
        const auto h = coincidence::delay_histogram(file.tags, parse_real(bin, "--bin-ps"), parse_real(range, "--range-ns"));
        std::ostringstream ss;
        coincidence::write_histogram_csv(ss, h);
        emit(out, ss.str());
    } else if (*dip || *decay) {
        std::istringstream src(read_file(in, "input-not-found"));
        const auto points = analysis::read_points_csv(src);
        const auto fit = *dip ? analysis::fit_gaussian_dip(points) : analysis::fit_half_life(points);
        std::ostringstream ss;
        analysis::write_fit_csv(ss, fit);
        emit(out, ss.str());
    } else if (*calibrate) {
        const auto start = base.empty() ? default_config() : load_config(read_file(base, "config-not-found"));
        emit(out, render(model::calibrate_reference_config(start)));
    }
    return 0;
}

void report(int code, const std::string& id, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = id;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
    std::exit(code);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const CliFailure& f) {
        report(f.exit_code, f.code, f.message);
    } catch (const ParseError& e) {
        report(2, "parse-error", e.what());
    } catch (const ConfigError& e) {
        report(2, "config-invalid", e.what());
    } catch (const FormatError& e) {
        report(1, "format-error", e.what());
    } catch (const InfeasibleError& e) {
        report(1, "infeasible", e.what());
    } catch (const NoRootError& e) {
        report(1, "no-root", e.what());
    } catch (const ConvergenceError& e) {
        report(1, "non-convergence", e.what());
    } catch (const DegenerateDataError& e) {
        report(1, "degenerate-data", e.what());
    } catch (const ZeroDivisionError& e) {
        report(1, "division-by-zero", e.what());
    } catch (const DomainError& e) {
        report(1, "domain-error", e.what());
    } catch (const std::exception& e) {
        report(1, "internal", e.what());
    }
    return 1;
}
