#include "qmem/config.hpp"

#include "qmem/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

namespace qmem {

namespace {

// Frozen output of model::calibrate_reference_config() on the base configuration.
// tests/test_model.cpp re-runs the calibration and checks these values.
constexpr double kDefaultMeanPairs = 0.011657614042780977;
constexpr double kDefaultHeraldPerPulse = 0.0027453071518717125;
constexpr double kDefaultSignalDetection = 0.092810406633587625;
constexpr double kDefaultHbtNoiseScale = 1.7584039354328451;
constexpr double kDefaultHeraldPerPair = 0.47666582445422107;
constexpr double kDefaultFwmCps = 2.5675675675675675;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

using Field = std::variant<double*, int*, bool*, std::uint64_t*, std::string*, Stage*>;

// Key order here is the render order.
std::vector<std::pair<std::string, Field>> fields_of(ExperimentConfig& c) {
    std::vector<std::pair<std::string, Field>> f = {
        {"scenario", &c.scenario},
        {"seed", &c.seed},
        {"stage", &c.stage},
        {"input_blocked", &c.input_blocked},
        {"storage_time_ps", &c.storage_time_ps},
        {"herald_click_prob_per_pulse", &c.herald_click_prob_per_pulse},
        {"laser.rep_rate_MHz", &c.laser.rep_rate_MHz},
        {"laser.pulse_fwhm_fs", &c.laser.pulse_fwhm_fs},
        {"laser.write_energy_nJ", &c.laser.write_energy_nJ},
        {"laser.read_energy_nJ", &c.laser.read_energy_nJ},
        {"source.mean_pairs_mu", &c.source.mean_pairs_mu},
        {"source.schmidt_modes_K", &c.source.schmidt_modes_K},
        {"source.herald_click_prob_per_pair", &c.source.herald_click_prob_per_pair},
        {"source.signal_heralding_eff", &c.source.signal_heralding_eff},
        {"source.photon_fwhm_fs", &c.source.photon_fwhm_fs},
        {"source.n_max", &c.source.n_max},
        {"memory.write_kappa_per_nJ", &c.memory.write_kappa_per_nJ},
        {"memory.read_kappa_per_nJ", &c.memory.read_kappa_per_nJ},
        {"memory.phonon_half_life_ps", &c.memory.phonon_half_life_ps},
        {"memory.phonon_freq_THz", &c.memory.phonon_freq_THz},
        {"memory.detuning_THz", &c.memory.detuning_THz},
        {"memory.absorption_fwhm_fs", &c.memory.absorption_fwhm_fs},
        {"noise.temperature_K", &c.noise.temperature_K},
        {"noise.thermal_coinc_cps", &c.noise.thermal_coinc_cps},
        {"noise.fwm_coinc_cps", &c.noise.fwm_coinc_cps},
        {"noise.noise_g2", &c.noise.noise_g2},
        {"noise.thermal_enabled", &c.noise.thermal_enabled},
        {"noise.fwm_enabled", &c.noise.fwm_enabled},
        {"noise.hbt_noise_scale", &c.noise.hbt_noise_scale},
    };
    for (auto [name, det] : {std::pair{"herald", &c.detectors.herald},
                             std::pair{"signal1", &c.detectors.signal1},
                             std::pair{"signal2", &c.detectors.signal2}}) {
        const std::string p = std::string("detectors.") + name + ".";
        f.emplace_back(p + "efficiency", &det->efficiency);
        f.emplace_back(p + "dark_cps", &det->dark_cps);
        f.emplace_back(p + "jitter_fwhm_ps", &det->jitter_fwhm_ps);
        f.emplace_back(p + "dead_time_ns", &det->dead_time_ns);
    }
    f.emplace_back("coincidence.window_ps", &c.coincidence.window_ps);
    f.emplace_back("coincidence.histogram_bin_ps", &c.coincidence.histogram_bin_ps);
    f.emplace_back("coincidence.delay_range_ns", &c.coincidence.delay_range_ns);
    f.emplace_back("coincidence.electronic_delay_ps", &c.coincidence.electronic_delay_ps);
    return f;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(line, "expected a finite number, got '" + s + "'");
    }
    return v;
}

void assign(Field field, const std::string& value, std::size_t line) {
    std::visit(
        [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) {
                *p = parse_double(value, line);
            } else if constexpr (std::is_same_v<T, int>) {
                const double v = parse_double(value, line);
                if (v != std::floor(v) || std::abs(v) > std::numeric_limits<int>::max()) {
                    throw ParseError(line, "expected an integer, got '" + value + "'");
                }
                *p = static_cast<int>(v);
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                std::uint64_t v = 0;
                auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
                if (ec != std::errc() || ptr != value.data() + value.size()) {
                    throw ParseError(line, "expected an unsigned 64-bit integer, got '" + value + "'");
                }
                *p = v;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (value == "true" || value == "1") {
                    *p = true;
                } else if (value == "false" || value == "0") {
                    *p = false;
                } else {
                    throw ParseError(line, "expected true/false, got '" + value + "'");
                }
            } else if constexpr (std::is_same_v<T, Stage>) {
                if (value == "memory_input") {
                    *p = Stage::memory_input;
                } else if (value == "memory_output") {
                    *p = Stage::memory_output;
                } else {
                    throw ParseError(line, "expected memory_input/memory_output, got '" + value + "'");
                }
            } else {
                *p = value;
            }
        },
        field);
}

std::string format_field(const Field& field) {
    return std::visit(
        [](auto* p) -> std::string {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, double>) {
                return format_double(*p);
            } else if constexpr (std::is_same_v<T, bool>) {
                return *p ? "true" : "false";
            } else if constexpr (std::is_same_v<T, Stage>) {
                return std::string(to_string(*p));
            } else if constexpr (std::is_same_v<T, std::string>) {
                return *p;
            } else {
                return std::to_string(*p);
            }
        },
        field);
}

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void validate_detector(const DetectorConfig& d, const std::string& prefix, double period_ps) {
    const auto key = [&](const char* f) { return prefix + f; };
    if (!is_probability(d.efficiency)) throw ConfigError(key("efficiency"), "must lie in [0,1]");
    if (!(d.dark_cps >= 0.0)) throw ConfigError(key("dark_cps"), "must be >= 0");
    if (!(d.jitter_fwhm_ps >= 0.0)) throw ConfigError(key("jitter_fwhm_ps"), "must be >= 0");
    if (!(d.dead_time_ns >= 0.0)) throw ConfigError(key("dead_time_ns"), "must be >= 0");
    // Jittered tags must stay inside their own pulse period (9 sigma bound).
    if (9.0 * d.jitter_sigma_ps() >= 0.5 * period_ps) {
        throw ConfigError(key("jitter_fwhm_ps"), "jitter too large for the pulse period");
    }
}

}  // namespace

std::string_view to_string(Stage stage) {
    return stage == Stage::memory_input ? "memory_input" : "memory_output";
}

std::string_view to_string(Channel channel) {
    switch (channel) {
        case Channel::herald: return "herald";
        case Channel::signal1: return "signal1";
        case Channel::signal2: return "signal2";
    }
    return "unknown";
}

std::uint64_t LaserConfig::period_fs() const {
    return static_cast<std::uint64_t>(std::llround(1e9 / rep_rate_MHz));
}

double DetectorConfig::jitter_sigma_ps() const { return jitter_fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

const DetectorConfig& DetectorSet::operator[](Channel c) const {
    switch (c) {
        case Channel::herald: return herald;
        case Channel::signal1: return signal1;
        default: return signal2;
    }
}

DetectorConfig& DetectorSet::operator[](Channel c) {
    return const_cast<DetectorConfig&>(std::as_const(*this)[c]);
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
    return render(*this) == render(other);
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.source.mean_pairs_mu = kDefaultMeanPairs;
    c.source.herald_click_prob_per_pair = kDefaultHeraldPerPair;
    c.memory.write_kappa_per_nJ = std::log(1.25) / 12.5;
    c.memory.read_kappa_per_nJ = -std::log(0.9) / 6.25;
    c.noise.fwm_coinc_cps = kDefaultFwmCps;
    c.noise.hbt_noise_scale = kDefaultHbtNoiseScale;
    c.detectors.herald.efficiency = 0.5;
    c.detectors.signal1.efficiency = kDefaultSignalDetection;
    c.detectors.signal2.efficiency = kDefaultSignalDetection;
    c.herald_click_prob_per_pulse = kDefaultHeraldPerPulse;
    return c;
}

void validate(const ExperimentConfig& c) {
    require(c.laser.rep_rate_MHz > 0.0, "laser.rep_rate_MHz", "must be > 0");
    require(c.laser.period_fs() > 0, "laser.rep_rate_MHz", "period below 1 fs");
    require(c.laser.pulse_fwhm_fs > 0.0, "laser.pulse_fwhm_fs", "must be > 0");
    require(c.laser.write_energy_nJ >= 0.0, "laser.write_energy_nJ", "must be >= 0");
    require(c.laser.read_energy_nJ >= 0.0, "laser.read_energy_nJ", "must be >= 0");

    require(c.source.mean_pairs_mu >= 0.0, "source.mean_pairs_mu", "must be >= 0");
    require(c.source.schmidt_modes_K >= 1, "source.schmidt_modes_K", "must be >= 1");
    require(is_probability(c.source.herald_click_prob_per_pair), "source.herald_click_prob_per_pair", "must lie in [0,1]");
    require(is_probability(c.source.signal_heralding_eff), "source.signal_heralding_eff", "must lie in [0,1]");
    require(c.source.photon_fwhm_fs > 0.0, "source.photon_fwhm_fs", "must be > 0");
    require(c.source.n_max >= 1 && c.source.n_max <= 200, "source.n_max", "must lie in [1,200]");

    require(c.memory.write_kappa_per_nJ >= 0.0, "memory.write_kappa_per_nJ", "must be >= 0");
    require(c.memory.read_kappa_per_nJ >= 0.0, "memory.read_kappa_per_nJ", "must be >= 0");
    require(c.memory.phonon_half_life_ps > 0.0, "memory.phonon_half_life_ps", "must be > 0");
    require(c.memory.phonon_freq_THz > 0.0, "memory.phonon_freq_THz", "must be > 0");
    require(c.memory.absorption_fwhm_fs > 0.0, "memory.absorption_fwhm_fs", "must be > 0");

    require(c.noise.temperature_K >= 0.0, "noise.temperature_K", "must be >= 0");
    require(c.noise.thermal_coinc_cps >= 0.0, "noise.thermal_coinc_cps", "must be >= 0");
    require(c.noise.fwm_coinc_cps >= 0.0, "noise.fwm_coinc_cps", "must be >= 0");
    require(c.noise.noise_g2 >= 1.0 && c.noise.noise_g2 <= 2.0, "noise.noise_g2", "must lie in [1,2]");
    require(c.noise.hbt_noise_scale >= 0.0, "noise.hbt_noise_scale", "must be >= 0");

    const double period_ps = c.laser.period_ns() * 1e3;
    validate_detector(c.detectors.herald, "detectors.herald.", period_ps);
    validate_detector(c.detectors.signal1, "detectors.signal1.", period_ps);
    validate_detector(c.detectors.signal2, "detectors.signal2.", period_ps);

    require(c.coincidence.window_ps > 0.0, "coincidence.window_ps", "must be > 0");
    require(c.coincidence.histogram_bin_ps > 0.0, "coincidence.histogram_bin_ps", "must be > 0");
    require(c.coincidence.delay_range_ns > 0.0, "coincidence.delay_range_ns", "must be > 0");
    // Pulse-gated coincidences: the window must stay inside one period.
    require(0.5 * c.coincidence.window_ps + std::abs(c.coincidence.electronic_delay_ps) < 0.5 * period_ps,
            "coincidence.window_ps", "window plus delay exceeds half the pulse period");
    require(0.5 * std::max(c.coincidence.window_ps, kReferenceWindowPs) < 0.5 * period_ps,
            "coincidence.window_ps", "reference window exceeds the pulse period");

    require(!c.scenario.empty() && c.scenario.find_first_of(" \t#=") == std::string::npos, "scenario",
            "must be a non-empty identifier");
    require(c.storage_time_ps >= 0.0, "storage_time_ps", "must be >= 0");
    require(is_probability(c.herald_click_prob_per_pulse), "herald_click_prob_per_pulse", "must lie in [0,1]");
}

ExperimentConfig load_config(std::string_view text) {
    ExperimentConfig cfg = default_config();
    auto fields = fields_of(cfg);
    std::map<std::string, Field> by_key(fields.begin(), fields.end());

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
        const auto it = by_key.find(key);
        if (it == by_key.end()) throw ParseError(line_no, "unknown key '" + key + "'");
        assign(it->second, value, line_no);
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str());
}

std::string render(const ExperimentConfig& cfg) {
    ExperimentConfig copy = cfg;
    std::string out;
    for (const auto& [key, field] : fields_of(copy)) {
        out += key;
        out += " = ";
        out += format_field(field);
        out += '\n';
    }
    return out;
}

}  // namespace qmem
