#pragma once

// Figure-regeneration scenarios: a sweep grid, an engine, and a fixed CSV
// schema per scenario, plus a JSON run manifest sufficient to re-run.

#include "qmem/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qmem::scenario {

enum class EngineKind { analytic, montecarlo };

std::string_view to_string(EngineKind engine);
EngineKind parse_engine(std::string_view name);

inline constexpr std::string_view kScenarioIds[] = {"fig2_absorption", "fig2_readout", "fig3_histogram", "fig4_g2",
                                                   "custom"};

struct RunOptions {
    std::string scenario = "custom";
    EngineKind engine = EngineKind::analytic;
    /// Pulses per sweep point (Monte Carlo); histogram scale for analytic fig3.
    std::uint64_t pulses = 0;
    std::uint64_t seed = 1;
    /// 0 reads QMEM_WORKERS.
    unsigned workers = 0;
    /// Monte Carlo fig3/custom: also write the raw time-tag stream here.
    std::string tags_path;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    std::vector<double> column(const std::string& name) const;
};

/// Sweep variable values, in output order.
std::vector<double> default_grid(std::string_view scenario);

/// Scenario-specific configuration adjustments (e.g. the absorption run
/// places the full pulse energy in the write pulse).
ExperimentConfig scenario_config(const ExperimentConfig& cfg, std::string_view scenario);

/// Throws DomainError on unknown scenarios or invalid options.
Table run_scenario(const ExperimentConfig& cfg, const RunOptions& options);

/// The analytic expectation of fig3_histogram for `pulses` pulses.
Table expected_histogram(const ExperimentConfig& cfg, std::uint64_t pulses);

struct Manifest {
    ExperimentConfig config;
    RunOptions options;
    std::string output;
    double wall_time_s = 0.0;
};

std::string manifest_json(const Manifest& manifest);
/// Throws ParseError / ConfigError.
Manifest parse_manifest(const std::string& json_text);

std::string version();

}  // namespace qmem::scenario
