#pragma once

// Experiment configuration: a line-oriented `key = value` file with dotted
// keys. '#' starts a comment. Unknown keys are errors. Values are in lab
// units (the unit is part of the key name); the loaded ExperimentConfig is
// SI with angular frequencies.
//
// Overrides ("key=value") are applied to the raw entries after the file is
// read and before validation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rydberg/blockade.hpp"
#include "rydberg/error.hpp"
#include "rydberg/params.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

/// Switches for the density-matrix model.
struct SimulationSettings {
    bool spectator_coupling = true;       // non-addressed qubit state coupled to |r> at detuning omega_hf
    bool intermediate_scattering = false; // loss from the intermediate p level during pulses
    bool radiative_decay = true;          // |r> -> sink at 1/tau

    bool operator==(const SimulationSettings &) const = default;
};

struct ExperimentConfig {
    AtomSpecies species;
    RydbergLevel level;
    LaserExcitation laser;
    Environment environment;
    double separation = 0.0;  // m
    BlockadeModel blockade = ConstantBlockade{kInfinity};
    SimulationSettings sim;

    // Explicitly given entries after overrides, as written. Serialization
    // emits exactly these, so a reparse reproduces every derived value.
    std::map<std::string, std::string> entries;
    std::vector<std::string> defaulted;  // keys filled from built-in defaults
    std::vector<std::string> warnings;

    double blockade_shift() const { return rydberg::blockade_shift(blockade, separation); }
    double k_2nu() const { return laser.k_2nu(); }
    double minimum_gap_time() const { return kTwoPi / laser.rabi; }
    double gap_time() const { return environment.gap_time.value_or(minimum_gap_time()); }
    bool is_defaulted(std::string_view key) const {
        return std::find(defaulted.begin(), defaulted.end(), key) != defaulted.end();
    }

    bool operator==(const ExperimentConfig &o) const {
        return species == o.species && level == o.level && laser == o.laser && environment == o.environment &&
               separation == o.separation && blockade == o.blockade && sim == o.sim && entries == o.entries;
    }
};

enum class KeyKind { number, integer, boolean, text };

struct ConfigKey {
    const char *name;
    KeyKind kind;
    bool required;
    const char *doc;
};

/// Every accepted key. `required` keys must be present; conditional
/// requirements (blockade variant parameters, tau outside the lifetime
/// table) are enforced during validation.
inline const std::vector<ConfigKey> &config_schema() {
    static const std::vector<ConfigKey> keys = {
        {"species.name", KeyKind::text, false, "atomic species; only Rb87 (default Rb87)"},
        {"species.mass_amu", KeyKind::number, false, "atomic mass, u (default 86.909180527)"},
        {"species.hf_splitting_ghz", KeyKind::number, false,
         "ground hyperfine splitting omega_hf/2pi, GHz; 'inf' disables spectator leakage (default 6.834682610904)"},
        {"species.ground_g_m", KeyKind::number, false, "g_g * m_fg of the ground qubit state (default 0, clock state)"},
        {"level.n", KeyKind::integer, true, "principal quantum number, >= 10"},
        {"level.l", KeyKind::integer, true, "orbital angular momentum"},
        {"level.j", KeyKind::number, true, "total angular momentum, l +/- 1/2"},
        {"level.m_j", KeyKind::number, true, "magnetic quantum number"},
        {"level.tau_us", KeyKind::number, false,
         "radiative lifetime, us; 'inf' allowed; default only for Rb ns1/2 at n = 75, 100, 125, 150"},
        {"level.g_R", KeyKind::number, false, "override of the Lande g_J; must agree with the Lande value to 1%"},
        {"laser.rabi_mhz", KeyKind::number, true, "two-photon Rabi frequency Omega/2pi, MHz"},
        {"laser.rabi1_mhz", KeyKind::number, false,
         "one-photon Rabi frequency Omega_1/2pi, MHz (default sqrt(2 Delta Omega), equal one-photon Rabi frequencies)"},
        {"laser.intermediate_lifetime_ns", KeyKind::number, true, "intermediate p-level lifetime 1/gamma_p, ns"},
        {"laser.detuning_ghz", KeyKind::number, true, "intermediate-state detuning Delta/2pi, GHz"},
        {"laser.lambda_1_nm", KeyKind::number, true, "first excitation wavelength, nm"},
        {"laser.lambda_2_nm", KeyKind::number, true, "second excitation wavelength, nm"},
        {"laser.geometry", KeyKind::text, true, "beam geometry: co | counter"},
        {"environment.temperature_uK", KeyKind::number, true, "atom temperature, uK"},
        {"environment.sigma_T", KeyKind::number, true, "std dev of quasi-static magnetic field noise, T"},
        {"environment.gap_time_us", KeyKind::number, false,
         "gap time during which the control atom is Rydberg excited, us (default 2pi/Omega)"},
        {"environment.loss_probability", KeyKind::number, false, "atom loss probability per atom per stage (default 0)"},
        {"environment.loss_stages", KeyKind::integer, false, "number of trap-drop stages (default 1)"},
        {"geometry.separation_um", KeyKind::number, true, "atom separation R, um"},
        {"blockade.model", KeyKind::text, true, "constant | vdw | table"},
        {"blockade.shift_mhz", KeyKind::number, false, "constant model: B/2pi, MHz; 'inf' = perfect blockade"},
        {"blockade.c6_ghz_um6", KeyKind::number, false, "vdw model: C6/2pi, GHz um^6"},
        {"blockade.table", KeyKind::text, false, "table model: CSV path (R_um, B_MHz), relative to the config file"},
        {"sim.spectator_coupling", KeyKind::boolean, false, "couple the spectator qubit state to |r> (default true)"},
        {"sim.intermediate_scattering", KeyKind::boolean, false,
         "include intermediate-level scattering during pulses (default false)"},
        {"sim.radiative_decay", KeyKind::boolean, false, "include |r> radiative decay (default true)"},
    };
    return keys;
}

inline const ConfigKey *find_config_key(std::string_view name) {
    for (const auto &k : config_schema()) {
        if (name == k.name) {
            return &k;
        }
    }
    return nullptr;
}

/// Human-readable key list with units.
inline std::string config_schema_text() {
    std::ostringstream os;
    os << "# Experiment config keys (dotted key = value; '#' comments)\n";
    for (const auto &k : config_schema()) {
        os << "# " << k.name << (k.required ? " (required)" : "") << ": " << k.doc << "\n";
    }
    return os.str();
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string &key, const std::string &text) {
    std::string_view sv = text;
    if (!sv.empty() && sv.front() == '+') {
        sv.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
    if (ec != std::errc() || ptr != sv.data() + sv.size() || std::isnan(value)) {
        throw ValidationError(key, "cannot parse '" + text + "' as a number");
    }
    return value;
}

inline int parse_integer(const std::string &key, const std::string &text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ValidationError(key, "cannot parse '" + text + "' as an integer");
    }
    return value;
}

inline bool parse_bool(const std::string &key, const std::string &text) {
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ValidationError(key, "cannot parse '" + text + "' as a boolean");
}

inline void check_value_syntax(const ConfigKey &key, const std::string &value) {
    switch (key.kind) {
        case KeyKind::number: parse_number(key.name, value); break;
        case KeyKind::integer: parse_integer(key.name, value); break;
        case KeyKind::boolean: parse_bool(key.name, value); break;
        case KeyKind::text:
            if (value.empty()) {
                throw ValidationError(key.name, "empty value");
            }
            break;
    }
}

}  // namespace detail

/// Raw key/value entries, before validation.
using ConfigEntries = std::map<std::string, std::string>;

inline ConfigEntries parse_config_entries(std::istream &in) {
    ConfigEntries entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = detail::trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        const ConfigKey *info = find_config_key(key);
        if (info == nullptr) {
            throw ValidationError(key, "unknown key (line " + std::to_string(line_no) + ")");
        }
        if (entries.count(key) != 0) {
            throw ValidationError(key, "duplicate key (line " + std::to_string(line_no) + ")");
        }
        detail::check_value_syntax(*info, value);
        entries[key] = value;
    }
    return entries;
}

/// Applies one "key=value" override. Unknown keys and malformed values throw.
inline void apply_override(ConfigEntries &entries, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ValidationError(std::string(assignment), "override must be key=value");
    }
    const std::string key = detail::trim(assignment.substr(0, eq));
    const std::string value = detail::trim(assignment.substr(eq + 1));
    const ConfigKey *info = find_config_key(key);
    if (info == nullptr) {
        throw ValidationError(key, "unknown key in override");
    }
    detail::check_value_syntax(*info, value);
    entries[key] = value;
}

/// Validates raw entries and builds the config with every derived quantity
/// populated. `base_dir` resolves a relative blockade table path.
inline ExperimentConfig build_config(const ConfigEntries &entries, const std::filesystem::path &base_dir = {}) {
    ExperimentConfig cfg;
    cfg.entries = entries;

    auto has = [&](const char *k) { return entries.count(k) != 0; };
    auto raw = [&](const char *k) -> const std::string & {
        auto it = entries.find(k);
        if (it == entries.end()) {
            throw ValidationError(k, "missing required key");
        }
        return it->second;
    };
    auto number = [&](const char *k) { return detail::parse_number(k, raw(k)); };
    auto integer = [&](const char *k) { return detail::parse_integer(k, raw(k)); };
    auto boolean = [&](const char *k) { return detail::parse_bool(k, raw(k)); };
    auto number_or = [&](const char *k, double fallback) {
        if (has(k)) {
            return number(k);
        }
        cfg.defaulted.emplace_back(k);
        return fallback;
    };

    for (const auto &k : config_schema()) {
        if (k.required && !has(k.name)) {
            throw ValidationError(k.name, "missing required key");
        }
    }

    // species
    if (has("species.name")) {
        cfg.species.name = raw("species.name");
        if (cfg.species.name != "Rb87") {
            throw ValidationError("species.name", "only Rb87 is supported, got '" + cfg.species.name + "'");
        }
    } else {
        cfg.defaulted.emplace_back("species.name");
    }
    cfg.species.mass = number_or("species.mass_amu", 86.909180527) * PhysicalConstants::amu;
    detail::require_positive(cfg.species.mass, "species.mass_amu");
    cfg.species.omega_hf = units::ghz_to_rad(number_or("species.hf_splitting_ghz", 6.834682610904));
    detail::require_positive(cfg.species.omega_hf, "species.hf_splitting_ghz");
    cfg.species.ground_g_m = number_or("species.ground_g_m", 0.0);

    // level
    cfg.level.n = integer("level.n");
    if (cfg.level.n < 10) {
        throw ValidationError("level.n", "must be >= 10");
    }
    cfg.level.l = integer("level.l");
    if (cfg.level.l < 0 || cfg.level.l >= cfg.level.n) {
        throw ValidationError("level.l", "must satisfy 0 <= l < n");
    }
    cfg.level.j = number("level.j");
    cfg.level.m_j = number("level.m_j");
    const double g_lande = lande_g(cfg.level.l, cfg.level.j);
    if (std::abs(cfg.level.m_j) > cfg.level.j + 1e-12 ||
        std::abs(std::round(cfg.level.j - cfg.level.m_j) - (cfg.level.j - cfg.level.m_j)) > 1e-12) {
        throw ValidationError("level.m_j", "must be one of -j, -j+1, ..., j");
    }
    cfg.level.g_R = g_lande;
    if (has("level.g_R")) {
        const double g_user = number("level.g_R");
        if (std::abs(g_user - g_lande) > 0.01 * g_lande) {
            throw ValidationError("level.g_R", "override " + std::to_string(g_user) +
                                                   " disagrees with the Lande value " + std::to_string(g_lande));
        }
        cfg.level.g_R = g_user;
    }
    if (has("level.tau_us")) {
        cfg.level.tau = units::us_to_s(number("level.tau_us"));
    } else if (auto tau = tabulated_lifetime(cfg.species.name, cfg.level.n, cfg.level.l, cfg.level.j)) {
        cfg.level.tau = *tau;
        cfg.defaulted.emplace_back("level.tau_us");
    } else {
        throw ValidationError("level.tau_us", "required: no built-in lifetime for this level");
    }
    detail::require_positive(cfg.level.tau, "level.tau_us");

    // laser
    cfg.laser.rabi = units::mhz_to_rad(number("laser.rabi_mhz"));
    detail::require_positive(cfg.laser.rabi, "laser.rabi_mhz");
    if (!std::isfinite(cfg.laser.rabi)) {
        throw ValidationError("laser.rabi_mhz", "must be finite");
    }
    const double lifetime_p = units::ns_to_s(number("laser.intermediate_lifetime_ns"));
    detail::require_positive(lifetime_p, "laser.intermediate_lifetime_ns");
    cfg.laser.gamma_p = 1.0 / lifetime_p;
    cfg.laser.detuning = units::ghz_to_rad(number("laser.detuning_ghz"));
    if (!(std::abs(cfg.laser.detuning) > 0.0) || !std::isfinite(cfg.laser.detuning)) {
        throw ValidationError("laser.detuning_ghz", "must be finite and non-zero");
    }
    if (std::abs(cfg.laser.detuning) < 100.0 * cfg.laser.gamma_p) {
        cfg.warnings.emplace_back("laser.detuning_ghz: |Delta| is not >> gamma_p");
    }
    if (has("laser.rabi1_mhz")) {
        cfg.laser.rabi_single = units::mhz_to_rad(number("laser.rabi1_mhz"));
    } else {
        cfg.laser.rabi_single = std::sqrt(2.0 * std::abs(cfg.laser.detuning) * cfg.laser.rabi);
        cfg.defaulted.emplace_back("laser.rabi1_mhz");
    }
    detail::require_positive(cfg.laser.rabi_single, "laser.rabi1_mhz");
    cfg.laser.lambda_1 = units::nm_to_m(number("laser.lambda_1_nm"));
    cfg.laser.lambda_2 = units::nm_to_m(number("laser.lambda_2_nm"));
    detail::require_positive(cfg.laser.lambda_1, "laser.lambda_1_nm");
    detail::require_positive(cfg.laser.lambda_2, "laser.lambda_2_nm");
    const std::string &geometry = raw("laser.geometry");
    if (geometry == "co") {
        cfg.laser.geometry = BeamGeometry::co_propagating;
    } else if (geometry == "counter") {
        cfg.laser.geometry = BeamGeometry::counter_propagating;
    } else {
        throw ValidationError("laser.geometry", "must be 'co' or 'counter', got '" + geometry + "'");
    }

    // environment
    cfg.environment.temperature = units::uk_to_k(number("environment.temperature_uK"));
    detail::require_non_negative(cfg.environment.temperature, "environment.temperature_uK");
    cfg.environment.sigma = number("environment.sigma_T");
    detail::require_non_negative(cfg.environment.sigma, "environment.sigma_T");
    if (has("environment.gap_time_us")) {
        cfg.environment.gap_time = units::us_to_s(number("environment.gap_time_us"));
        detail::require_non_negative(*cfg.environment.gap_time, "environment.gap_time_us");
    } else {
        cfg.defaulted.emplace_back("environment.gap_time_us");
    }
    cfg.environment.loss_probability = number_or("environment.loss_probability", 0.0);
    if (!(cfg.environment.loss_probability >= 0.0 && cfg.environment.loss_probability < 1.0)) {
        throw ValidationError("environment.loss_probability", "must be in [0, 1)");
    }
    if (has("environment.loss_stages")) {
        cfg.environment.loss_stages = integer("environment.loss_stages");
        if (cfg.environment.loss_stages < 0) {
            throw ValidationError("environment.loss_stages", "must be >= 0");
        }
    } else {
        cfg.defaulted.emplace_back("environment.loss_stages");
    }

    // geometry + blockade
    cfg.separation = units::um_to_m(number("geometry.separation_um"));
    detail::require_positive(cfg.separation, "geometry.separation_um");
    const std::string &model = raw("blockade.model");
    auto reject = [&](const char *k) {
        if (has(k)) {
            throw ValidationError(k, "not used by blockade.model = " + model);
        }
    };
    if (model == "constant") {
        cfg.blockade = ConstantBlockade{units::mhz_to_rad(number("blockade.shift_mhz"))};
        reject("blockade.c6_ghz_um6");
        reject("blockade.table");
    } else if (model == "vdw") {
        cfg.blockade = VanDerWaalsBlockade{units::ghz_to_rad(number("blockade.c6_ghz_um6")) * 1e-36};
        reject("blockade.shift_mhz");
        reject("blockade.table");
    } else if (model == "table") {
        std::filesystem::path p = raw("blockade.table");
        if (p.is_relative() && !base_dir.empty()) {
            p = base_dir / p;
        }
        cfg.blockade = load_blockade_table(p.string());
        reject("blockade.shift_mhz");
        reject("blockade.c6_ghz_um6");
    } else {
        throw ValidationError("blockade.model", "must be constant, vdw or table, got '" + model + "'");
    }
    validate(cfg.blockade);
    const double b = cfg.blockade_shift();  // throws if R is outside a table

    if (std::isfinite(b) && std::isfinite(cfg.species.omega_hf) &&
        6.0 * b * b / (cfg.species.omega_hf * cfg.species.omega_hf) > 1.0) {
        cfg.warnings.emplace_back("blockade: 6 B^2/omega_hf^2 > 1, outside the regime B << omega_hf");
    }

    // simulation switches
    if (has("sim.spectator_coupling")) cfg.sim.spectator_coupling = boolean("sim.spectator_coupling");
    if (has("sim.intermediate_scattering")) cfg.sim.intermediate_scattering = boolean("sim.intermediate_scattering");
    if (has("sim.radiative_decay")) cfg.sim.radiative_decay = boolean("sim.radiative_decay");

    return cfg;
}

inline ExperimentConfig parse_config(std::istream &in, const std::vector<std::string> &overrides = {},
                                     const std::filesystem::path &base_dir = {}) {
    ConfigEntries entries = parse_config_entries(in);
    for (const auto &o : overrides) {
        apply_override(entries, o);
    }
    return build_config(entries, base_dir);
}

inline ExperimentConfig parse_config_text(const std::string &text, const std::vector<std::string> &overrides = {},
                                          const std::filesystem::path &base_dir = {}) {
    std::istringstream in(text);
    return parse_config(in, overrides, base_dir);
}

/// Resolves a config path. Relative paths not found from the working
/// directory are searched in the ':'-separated RYDBERG_CONFIG_PATH.
inline std::filesystem::path resolve_config_path(const std::filesystem::path &path) {
    namespace fs = std::filesystem;
    if (fs::exists(path) || path.is_absolute()) {
        return path;
    }
    if (const char *search = std::getenv("RYDBERG_CONFIG_PATH")) {
        std::string_view dirs = search;
        while (!dirs.empty()) {
            const auto colon = dirs.find(':');
            const fs::path candidate = fs::path(std::string(dirs.substr(0, colon))) / path;
            if (fs::exists(candidate)) {
                return candidate;
            }
            if (colon == std::string_view::npos) {
                break;
            }
            dirs.remove_prefix(colon + 1);
        }
    }
    return path;
}

inline ExperimentConfig load_config(const std::filesystem::path &path, const std::vector<std::string> &overrides = {}) {
    const auto resolved = resolve_config_path(path);
    std::ifstream in(resolved);
    if (!in) {
        throw ValidationError("config", "cannot open '" + path.string() + "'");
    }
    auto base = std::filesystem::absolute(resolved).parent_path();
    return parse_config(in, overrides, base);
}

/// Canonical text form: the explicit entries in schema order, followed by
/// the defaulted keys as comments. Reparsing yields an equal config.
inline std::string serialize(const ExperimentConfig &cfg) {
    std::ostringstream os;
    for (const auto &k : config_schema()) {
        auto it = cfg.entries.find(k.name);
        if (it != cfg.entries.end()) {
            std::string value = it->second;
            if (k.name == std::string_view("blockade.table")) {
                if (auto *t = std::get_if<TabulatedBlockade>(&cfg.blockade); t && !t->source.empty()) {
                    value = std::filesystem::absolute(t->source).lexically_normal().string();
                }
            }
            os << k.name << " = " << value << "\n";
        }
    }
    for (const auto &d : cfg.defaulted) {
        os << "# " << d << " (default)\n";
    }
    return os.str();
}

/// 64-bit FNV-1a; used to fingerprint configs in output headers.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig &cfg) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a64(serialize(cfg));
    return os.str();
}

}  // namespace rydberg
