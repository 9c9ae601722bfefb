#pragma once

// Command-line front end. run() is the whole program; tools/rydberg_sim.cpp
// only forwards argv.
//
// Exit codes: 0 ok, 2 invalid input (config, overrides, flags), 3 runtime
// failure. Every output starts with '#' header lines recording the version,
// command, config hash, overrides, seed and shot count. Nothing time- or
// host-dependent is written, so identical inputs give identical bytes.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rydberg/budget.hpp"
#include "rydberg/config.hpp"
#include "rydberg/dynamics/protocols.hpp"
#include "rydberg/montecarlo.hpp"

#ifndef RYDBERG_VERSION
#define RYDBERG_VERSION "0.0.0"
#endif

namespace rydberg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

using json = nlohmann::ordered_json;

struct CommonOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::uint64_t shots = 10000;
};

namespace detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline json num(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return fmt(v);  // JSON has no inf / nan
}

// Collects header lines, CSV text and a JSON object for one command.
class Output {
public:
    Output(const CommonOptions &opt, std::string command, const ExperimentConfig &cfg)
        : opt_(opt), command_(std::move(command)) {
        meta_["version"] = RYDBERG_VERSION;
        meta_["command"] = command_;
        meta_["config"] = opt.config;
        meta_["config_hash"] = config_hash(cfg);
        meta_["overrides"] = opt.overrides;
        meta_["seed"] = opt.seed ? json(*opt.seed) : json(nullptr);
        meta_["shots"] = opt.shots;
        for (const auto &w : cfg.warnings) {
            warn(w);
        }
    }

    void warn(const std::string &w) { warnings_.push_back(w); }
    void note(const std::string &key, const std::string &value) {
        notes_.emplace_back(key, value);
        summary_[key] = value;
    }
    void note(const std::string &key, double value) {
        notes_.emplace_back(key, fmt(value));
        summary_[key] = num(value);
    }
    void note(const std::string &key, bool value) {
        notes_.emplace_back(key, value ? "true" : "false");
        summary_[key] = value;
    }

    std::ostringstream &csv() { return csv_; }
    json &data() { return data_; }

    std::string render() const {
        std::ostringstream os;
        if (opt_.format == "json") {
            json doc;
            doc["header"] = meta_;
            doc["warnings"] = warnings_;
            doc["summary"] = summary_;
            doc["data"] = data_;
            os << doc.dump(2) << "\n";
            return os.str();
        }
        os << "# rydberg_sim " << RYDBERG_VERSION << "\n";
        os << "# command: " << command_ << "\n";
        os << "# config: " << opt_.config << "\n";
        os << "# config_hash: " << meta_["config_hash"].get<std::string>() << "\n";
        os << "# overrides:";
        if (opt_.overrides.empty()) {
            os << " none";
        }
        for (const auto &o : opt_.overrides) {
            os << " " << o;
        }
        os << "\n# seed: " << (opt_.seed ? std::to_string(*opt_.seed) : "none") << "\n";
        os << "# shots: " << opt_.shots << "\n";
        for (const auto &w : warnings_) {
            os << "# warning: " << w << "\n";
        }
        for (const auto &[k, v] : notes_) {
            os << "# " << k << ": " << v << "\n";
        }
        os << csv_.str();
        return os.str();
    }

private:
    const CommonOptions &opt_;
    std::string command_;
    json meta_ = json::object();
    json summary_ = json::object();
    json data_ = json::array();
    std::vector<std::string> warnings_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::ostringstream csv_;
};

inline void emit(const CommonOptions &opt, const Output &o, std::ostream &out) {
    const std::string text = o.render();
    if (opt.out.empty() || opt.out == "-") {
        out << text;
        return;
    }
    std::ofstream f(opt.out, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write '" + opt.out + "'");
    }
    f << text;
}

inline std::uint64_t require_seed(const CommonOptions &opt) {
    if (!opt.seed) {
        throw ValidationError("seed", "--seed is required for stochastic commands");
    }
    return *opt.seed;
}

inline std::vector<double> linear_grid(double lo, double hi, int points) {
    if (points < 1) {
        throw ValidationError("points", "must be at least 1");
    }
    std::vector<double> g;
    for (int i = 0; i < points; ++i) {
        g.push_back(points == 1 ? lo : lo + (hi - lo) * i / (points - 1));
    }
    return g;
}

inline void write_matrix_csv(std::ostream &os, const dynamics::Matrix4 &m) {
    static const char *labels[] = {"00", "01", "10", "11"};
    os << "out,in,re,im,abs\n";
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            os << labels[r] << "," << labels[c] << "," << fmt(m(r, c).real()) << "," << fmt(m(r, c).imag()) << ","
               << fmt(std::abs(m(r, c))) << "\n";
        }
    }
}

inline json matrix_json(const dynamics::Matrix4 &m) {
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
        json row = json::array();
        for (int c = 0; c < 4; ++c) {
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        }
        rows.push_back(row);
    }
    return rows;
}

inline json record_json(const montecarlo::MeasurementRecord &r) {
    json j;
    j["phase_rad"] = r.phase ? json(*r.phase) : json(nullptr);
    j["shots"] = r.shots;
    j["counts"] = r.counts;
    j["lost"] = r.lost;
    j["parity"] = r.parity();
    return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void cmd_budget(const CommonOptions &opt, const ExperimentConfig &cfg, std::ostream &out) {
    const auto r = assemble_budget(cfg);
    detail::Output o(opt, "budget", cfg);
    for (const auto &w : r.warnings) {
        if (std::find(cfg.warnings.begin(), cfg.warnings.end(), w) == cfg.warnings.end()) {
            o.warn(w);
        }
    }
    if (!r.defaulted.empty()) {
        std::string joined;
        for (const auto &d : r.defaulted) {
            joined += (joined.empty() ? "" : " ") + d;
        }
        o.note("defaulted", joined);
    }
    o.note("hyperfine_regime_flag", r.hyperfine_regime_flag);
    o.note("e_min_regime_ok", r.e_min_regime_ok);
    o.csv() << "quantity,value\n";
    json obj = json::object();
    for (const auto &[k, v] : report_fields(r)) {
        o.csv() << k << "," << detail::fmt(v) << "\n";
        obj[k] = detail::num(v);
    }
    o.data() = obj;
    detail::emit(opt, o, out);
}

inline void cmd_scan_separation(const CommonOptions &opt, const ExperimentConfig &cfg,
                                const std::vector<double> &r_grid_um, std::ostream &out) {
    if (r_grid_um.empty()) {
        throw ValidationError("grid", "empty separation grid");
    }
    detail::Output o(opt, "scan-separation", cfg);
    o.csv() << "r_um,blockade_mhz,omega_opt_mhz,error_at_omega_opt,e_min,flag\n";
    const double tau = cfg.level.tau;
    const double hf = cfg.species.omega_hf;
    int flagged = 0;
    for (double r_um : r_grid_um) {
        const double b = rydberg::blockade_shift(cfg.blockade, units::um_to_m(r_um));
        double w = std::numeric_limits<double>::quiet_NaN(), e = w, em = w;
        std::string flag = "ok";
        if (!std::isfinite(b) || !std::isfinite(tau)) {
            flag = "no_finite_optimum";
        } else {
            w = omega_opt(b, tau);
            em = e_min(b, tau);
            if (w < hf) {
                e = gate_error_full(w, b, hf, tau);
                if (hyperfine_regime_flag(b, hf)) {
                    flag = "b_not_small_vs_omega_hf";
                }
            } else {
                flag = "omega_opt_above_omega_hf";
            }
        }
        flagged += flag != "ok";
        o.csv() << detail::fmt(r_um) << "," << detail::fmt(units::rad_to_mhz(b)) << ","
                << detail::fmt(units::rad_to_mhz(w)) << "," << detail::fmt(e) << "," << detail::fmt(em) << ","
                << flag << "\n";
        json row;
        row["r_um"] = r_um;
        row["blockade_mhz"] = detail::num(units::rad_to_mhz(b));
        row["omega_opt_mhz"] = detail::num(units::rad_to_mhz(w));
        row["error_at_omega_opt"] = detail::num(e);
        row["e_min"] = detail::num(em);
        row["flag"] = flag;
        o.data().push_back(row);
    }
    o.note("flagged_rows", static_cast<double>(flagged));
    detail::emit(opt, o, out);
}

inline void cmd_fidelity_limit(const CommonOptions &opt, const ExperimentConfig &cfg, double t_max_us, int points,
                               std::ostream &out) {
    rydberg::detail::require_positive(t_max_us, "t_max_us");
    const auto r = assemble_budget(cfg);
    detail::Output o(opt, "fidelity-limit", cfg);
    o.note("t2_b_us", units::s_to_us(r.t2_b));
    o.note("t2_d_us", units::s_to_us(r.t2_d));
    o.note("t2_us", units::s_to_us(r.t2));
    o.csv() << "t_us,f_magnetic,f_doppler,f_combined\n";
    for (double t_us : detail::linear_grid(0.0, t_max_us, points)) {
        const double t = units::us_to_s(t_us);
        const double fb = fidelity_limit(t, r.t2_b), fd = fidelity_limit(t, r.t2_d), fc = fidelity_limit(t, r.t2);
        o.csv() << detail::fmt(t_us) << "," << detail::fmt(fb) << "," << detail::fmt(fd) << "," << detail::fmt(fc)
                << "\n";
        o.data().push_back(json{{"t_us", t_us}, {"f_magnetic", fb}, {"f_doppler", fd}, {"f_combined", fc}});
    }
    detail::emit(opt, o, out);
}

inline void cmd_ramsey(const CommonOptions &opt, const ExperimentConfig &cfg, double t_max_us, int points,
                       std::ostream &out) {
    const auto seed = detail::require_seed(opt);
    rydberg::detail::require_positive(t_max_us, "t_max_us");
    std::vector<double> grid;
    for (double t_us : detail::linear_grid(0.0, t_max_us, points)) {
        grid.push_back(units::us_to_s(t_us));
    }
    const auto res = montecarlo::ramsey_simulate(grid, opt.shots, cfg, seed);
    const auto r = assemble_budget(cfg);
    detail::Output o(opt, "ramsey", cfg);
    o.note("fit_ok", res.fit.ok);
    if (!res.fit.message.empty()) {
        o.note("fit_message", res.fit.message);
    }
    if (!res.fit.ok) {
        o.warn("envelope fit failed; raw contrast data follows");
    }
    o.note("fit_t2_us", units::s_to_us(res.fit.t2));
    o.note("fit_t2_sigma_us", units::s_to_us(res.fit.t2_uncertainty));
    o.note("fit_amplitude", res.fit.amplitude);
    o.note("fit_residual_norm", res.fit.residual_norm);
    o.note("predicted_t2_us", units::s_to_us(r.t2));
    montecarlo::write_ramsey_csv(o.csv(), res);
    for (const auto &p : res.points) {
        o.data().push_back(json{{"t_us", units::s_to_us(p.t)},
                                {"contrast", p.contrast},
                                {"contrast_sigma", p.contrast_sigma},
                                {"signal", p.signal}});
    }
    detail::emit(opt, o, out);
}

inline dynamics::PulseSequence gate_sequence(const std::string &gate, double rabi) {
    if (gate == "cz") return dynamics::cz_sequence(rabi);
    if (gate == "cnot-h") return dynamics::cnot_hadamard_variant(rabi);
    if (gate == "cnot-swap") return dynamics::cnot_amplitude_swap(rabi);
    throw ValidationError("gate", "unknown gate '" + gate + "' (cz | cnot-h | cnot-swap)");
}

inline dynamics::DynamicsParams dynamics_params(const ExperimentConfig &cfg, bool ideal) {
    return ideal ? dynamics::DynamicsParams::ideal() : dynamics::DynamicsParams::from_config(cfg);
}

inline void cmd_simulate_gate(const CommonOptions &opt, const ExperimentConfig &cfg, const std::string &gate,
                              bool ideal, std::ostream &out) {
    const auto params = dynamics_params(cfg, ideal);
    const auto seq = gate_sequence(gate, cfg.laser.rabi);
    const dynamics::Matrix4 target = gate == "cz" ? dynamics::ideal_cz() : dynamics::ideal_cnot();
    const auto err = dynamics::gate_error(params, seq, target);
    const auto m = dynamics::effective_gate_matrix(params, seq);
    detail::Output o(opt, "simulate-gate", cfg);
    o.note("gate", gate);
    o.note("ideal_limit", ideal);
    o.note("duration_us", units::s_to_us(seq.duration()));
    o.note("gate_error", err.error);
    o.note("calibrated_error", err.calibrated_error);
    o.note("leakage", err.leakage);
    o.note("blockade_capped", err.blockade_capped);
    if (!ideal && std::isfinite(params.tau) && std::isfinite(params.blockade) && cfg.laser.rabi < params.omega_hf) {
        o.note("formula_error", gate_error_full(cfg.laser.rabi, params.blockade, params.omega_hf, params.tau));
    }
    for (int k = 0; k < 4; ++k) {
        o.note("phase_frame_" + std::to_string(k), err.phase_frame[static_cast<std::size_t>(k)]);
    }
    detail::write_matrix_csv(o.csv(), m);
    o.data() = detail::matrix_json(m);
    detail::emit(opt, o, out);
}

inline dynamics::BellVariant parse_variant(const std::string &v) {
    if (v == "b1") return dynamics::BellVariant::b1;
    if (v == "b2") return dynamics::BellVariant::b2;
    throw ValidationError("variant", "unknown Bell variant '" + v + "' (b1 | b2)");
}

inline dynamics::CnotProtocol parse_protocol(const std::string &p) {
    if (p == "cnot-h") return dynamics::CnotProtocol::hadamard;
    if (p == "cnot-swap") return dynamics::CnotProtocol::amplitude_swap;
    throw ValidationError("protocol", "unknown protocol '" + p + "' (cnot-h | cnot-swap)");
}

inline void emit_bell(const CommonOptions &opt, detail::Output &o, const montecarlo::BellExperimentResult &res,
                      std::ostream &out) {
    o.note("fidelity_corrected", res.fidelity.corrected);
    o.note("fidelity_raw", res.fidelity.raw);
    o.note("fidelity_sigma", res.fidelity_sigma);
    o.note("surviving_fraction", res.fidelity.surviving_fraction);
    o.note("parity_amplitude", res.record.parity.fit.amplitude);
    o.note("parity_period_rad", res.record.parity.fit.period);
    o.note("shot_mean_fidelity", res.exact_fidelity);
    std::vector<montecarlo::MeasurementRecord> all{res.record.populations};
    all.insert(all.end(), res.record.parity.records.begin(), res.record.parity.records.end());
    montecarlo::write_records_csv(o.csv(), all);
    for (const auto &r : all) {
        o.data().push_back(detail::record_json(r));
    }
    detail::emit(opt, o, out);
}

inline void cmd_simulate_bell(const CommonOptions &opt, const ExperimentConfig &cfg, const std::string &variant,
                              const std::string &protocol, bool ideal, std::optional<double> gap_us, int points,
                              std::ostream &out) {
    const auto seed = detail::require_seed(opt);
    const auto v = parse_variant(variant);
    const auto rho = dynamics::bell_prep(dynamics_params(cfg, ideal), cfg.laser.rabi, v, parse_protocol(protocol));
    const double gap = gap_us ? units::us_to_s(*gap_us) : cfg.gap_time();
    rydberg::detail::require_non_negative(gap, "gap_us");
    montecarlo::BellExperimentOptions bo;
    bo.variant = v;
    bo.phase_grid = montecarlo::phase_grid(points);
    bo.prepared = rho.computational_block();
    const auto res = montecarlo::bell_experiment(gap, opt.shots, cfg, seed, bo);
    const auto r = assemble_budget(cfg);
    detail::Output o(opt, "simulate-bell", cfg);
    o.note("variant", variant);
    o.note("protocol", protocol);
    o.note("ideal_limit", ideal);
    o.note("gap_us", units::s_to_us(gap));
    o.note("prepared_fidelity", dynamics::state_fidelity(rho, dynamics::bell_target(v)));
    o.note("fidelity_limit", fidelity_limit(gap, r.t2));
    emit_bell(opt, o, res, out);
}

inline void cmd_parity(const CommonOptions &opt, const ExperimentConfig &cfg, const std::string &variant,
                       std::optional<double> coherence, std::optional<double> gap_us, int points, std::ostream &out) {
    const auto seed = detail::require_seed(opt);
    const auto v = parse_variant(variant);
    const dynamics::Vector4 b = dynamics::bell_target(v);
    dynamics::Matrix4 rho = b * b.adjoint();
    if (coherence) {
        if (!(*coherence >= 0.0 && *coherence <= 1.0)) {
            throw ValidationError("coherence", "must lie in [0, 1]");
        }
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) rho(i, j) *= *coherence;
    }
    const double gap = gap_us ? units::us_to_s(*gap_us) : 0.0;
    rydberg::detail::require_non_negative(gap, "gap_us");
    montecarlo::BellExperimentOptions bo;
    bo.variant = v;
    bo.phase_grid = montecarlo::phase_grid(points);
    bo.prepared = rho;
    const auto res = montecarlo::bell_experiment(gap, opt.shots, cfg, seed, bo);
    detail::Output o(opt, "parity", cfg);
    o.note("variant", variant);
    o.note("gap_us", units::s_to_us(gap));
    if (coherence) {
        o.note("coherence", *coherence);
    }
    emit_bell(opt, o, res, out);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"Two-atom Rydberg blockade gate simulator and error budget"};
    app.set_version_flag("--version", std::string(RYDBERG_VERSION));
    app.require_subcommand(1);

    CommonOptions opt;
    auto common = [&](CLI::App *sub, bool stochastic) {
        sub->add_option("--config", opt.config, "experiment config file")->required();
        sub->add_option("--set", opt.overrides, "override key=value (repeatable)")->allow_extra_args(false);
        sub->add_option("--out", opt.out, "output file (default stdout)");
        sub->add_option("--format", opt.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
        if (stochastic) {
            sub->add_option("--seed", opt.seed, "RNG seed (required)");
            sub->add_option("--shots", opt.shots, "shots per measurement setting")->check(CLI::PositiveNumber);
        }
    };

    auto *budget = app.add_subcommand("budget", "error budget at the configured operating point");
    common(budget, false);

    std::vector<double> r_grid;
    auto *scan = app.add_subcommand("scan-separation", "B, Omega_opt and E versus atom separation");
    common(scan, false);
    scan->add_option("--grid", r_grid, "separations in um, comma separated")->delimiter(',')->required();

    double t_max_us = 10.0;
    int points = 41;
    auto *ramsey = app.add_subcommand("ramsey", "Monte Carlo Ramsey contrast and envelope fit");
    common(ramsey, true);
    ramsey->add_option("--t-max-us", t_max_us, "longest Ramsey time, us");
    ramsey->add_option("--points", points, "number of time points");

    auto *flimit = app.add_subcommand("fidelity-limit", "Bell fidelity limit versus gap time per channel");
    common(flimit, false);
    flimit->add_option("--t-max-us", t_max_us, "longest gap time, us");
    flimit->add_option("--points", points, "number of time points");

    std::string gate = "cz";
    bool ideal = false;
    auto *sgate = app.add_subcommand("simulate-gate", "density-matrix simulation of a gate");
    common(sgate, false);
    sgate->add_option("--gate", gate, "cz | cnot-h | cnot-swap");
    sgate->add_flag("--ideal", ideal, "ideal limit: perfect blockade, no decay, no spectator leakage");

    std::string variant = "b1", protocol = "cnot-h";
    std::optional<double> gap_us, coherence;
    int phase_points = 16;
    auto *sbell = app.add_subcommand("simulate-bell", "Bell-state preparation and Monte Carlo readout");
    common(sbell, true);
    sbell->add_option("--variant", variant, "b1 | b2");
    sbell->add_option("--protocol", protocol, "cnot-h | cnot-swap");
    sbell->add_flag("--ideal", ideal, "ideal-limit dynamics");
    sbell->add_option("--gap-us", gap_us, "gap time, us (default from config)");
    sbell->add_option("--phase-points", phase_points, "analysis phases over 2 pi");

    auto *parity = app.add_subcommand("parity", "parity oscillation of a dephased Bell state");
    common(parity, true);
    parity->add_option("--variant", variant, "b1 | b2");
    parity->add_option("--coherence", coherence, "scale factor on the Bell coherence");
    parity->add_option("--gap-us", gap_us, "dephasing gap, us (default 0)");
    parity->add_option("--phase-points", phase_points, "analysis phases over 2 pi");

    app.add_subcommand("schema", "list config keys")->callback([&] { out << config_schema_text(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        return kExitValidation;
    }
    if (app.got_subcommand("schema")) {
        return kExitOk;
    }

    try {
        const ExperimentConfig cfg = load_config(opt.config, opt.overrides);
        if (budget->parsed()) cmd_budget(opt, cfg, out);
        if (scan->parsed()) cmd_scan_separation(opt, cfg, r_grid, out);
        if (ramsey->parsed()) cmd_ramsey(opt, cfg, t_max_us, points, out);
        if (flimit->parsed()) cmd_fidelity_limit(opt, cfg, t_max_us, points, out);
        if (sgate->parsed()) cmd_simulate_gate(opt, cfg, gate, ideal, out);
        if (sbell->parsed()) cmd_simulate_bell(opt, cfg, variant, protocol, ideal, gap_us, phase_points, out);
        if (parity->parsed()) cmd_parity(opt, cfg, variant, coherence, gap_us, phase_points, out);
    } catch (const ValidationError &e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace rydberg::cli
