#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optospring/optospring.hpp"

namespace optospring::cli {

inline constexpr const char* version = "0.1.0";
inline constexpr const char* config_env_var = "OPTOSPRING_CONFIG";

enum ExitCode : int { ok = 0, validation_failure = 1, numerical_failure = 2, oracle_failure = 3 };

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string preset;
    std::size_t grid = 200;
    double omega_obs_hz = 1000.0;
    std::string band = "1500:2300";
    std::optional<double> duration;
    bool quiet = false;
    // subcommand extras
    std::string spectrum_path;
    double f_min_hz = 10.0;
    double f_max_hz = 1e5;
    double points_per_decade = 200.0;
    std::string carrier_range = "-5:5";
    std::string subcarrier_range = "-2:2";
    std::size_t oracle_points = 20;
};

namespace detail {

inline std::pair<double, double> parse_pair(const std::string& text, const std::string& flag) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ValidationError(flag + " expects LO:HI");
    try {
        std::size_t used = 0;
        const double lo = std::stod(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(text);
        const std::string rest = text.substr(colon + 1);
        const double hi = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        if (!(lo < hi)) throw ValidationError(flag + " needs LO < HI");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ValidationError(flag + " expects LO:HI, got '" + text + "'");
    }
}

using nlohmann::ordered_json;

inline ordered_json derived_json(const ExperimentConfig& cfg) {
    const auto d = derive_cavity(cfg.cavity);
    ordered_json j;
    j["linewidth_hwhm_rad_per_s"] = d.linewidth_hwhm;
    j["linewidth_hwhm_hz"] = d.linewidth_hwhm / constants::two_pi;
    j["free_spectral_range_hz"] = d.free_spectral_range;
    j["resonant_gain"] = d.resonant_gain;
    j["detuning_per_length_rad_per_s_per_m"] = d.detuning_per_length;
    j["reduced_mass_kg"] = reduced_mass(cfg.mirrors);
    j["mechanical_frequency_hz"] = cfg.mirrors.natural_frequency / constants::two_pi;
    j["mechanical_damping_per_s"] = cfg.mirrors.mechanical_damping;
    return j;
}

inline ordered_json resonance_json(const EffectiveResonance& r) {
    ordered_json j;
    j["omega_eff_rad_per_s"] = r.omega_eff;
    j["f_eff_hz"] = r.omega_eff / constants::two_pi;
    j["gamma_eff_per_s"] = r.gamma_eff;
    j["q_eff"] = r.q_eff;
    return j;
}

class Run {
public:
    Run(std::string command, std::vector<std::string> argv, const Options& opts, ExperimentConfig cfg,
        std::ostream& out)
        : command_(std::move(command)), argv_(std::move(argv)), opts_(opts), cfg_(std::move(cfg)),
          out_(out) {
        std::filesystem::create_directories(opts_.out_dir);
    }

    const ExperimentConfig& config() const { return cfg_; }
    const Options& options() const { return opts_; }

    std::string path(const std::string& name) {
        outputs_.push_back(name);
        return (std::filesystem::path(opts_.out_dir) / name).string();
    }

    template <typename T>
    void write_csv(const std::string& name, const T& value) {
        csv::write_file(path(name), value);
    }

    void write_json(const std::string& name, const ordered_json& j) {
        std::ofstream f(path(name));
        if (!f) throw ValidationError("cannot write " + name);
        f << j.dump(2) << '\n';
    }

    void say(const std::string& line) {
        if (!opts_.quiet) out_ << line << '\n';
    }

    /// Manifest plus the resolved config it references; re-running the
    /// recorded command against that config reproduces every output.
    void finish(int exit_code, const std::string& error = {}) {
        const std::string resolved = "config.resolved.yaml";
        {
            std::ofstream f(path(resolved));
            f << serialize_config(cfg_);
        }
        ordered_json m;
        m["version"] = version;
        m["command"] = command_;
        m["argv"] = argv_;
        m["exit_code"] = exit_code;
        if (!error.empty()) m["error"] = error;
        m["seed"] = cfg_.sim.seed;
        m["config_fingerprint"] = fingerprint(cfg_);
        m["resolved_config_file"] = resolved;
        m["config"] = serialize_config(cfg_);
        m["derived"] = derived_json(cfg_);
        ordered_json flags;
        flags["preset"] = opts_.preset;
        flags["grid"] = opts_.grid;
        flags["omega_obs_hz"] = opts_.omega_obs_hz;
        flags["band"] = opts_.band;
        flags["f_min_hz"] = opts_.f_min_hz;
        flags["f_max_hz"] = opts_.f_max_hz;
        flags["points_per_decade"] = opts_.points_per_decade;
        flags["carrier_range"] = opts_.carrier_range;
        flags["subcarrier_range"] = opts_.subcarrier_range;
        flags["spectrum"] = opts_.spectrum_path;
        m["flags"] = flags;
        m["outputs"] = outputs_;
        std::ofstream f((std::filesystem::path(opts_.out_dir) / "manifest.json").string());
        f << m.dump(2) << '\n';
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    Options opts_;
    ExperimentConfig cfg_;
    std::ostream& out_;
    std::vector<std::string> outputs_;
};

inline int cmd_derive(Run& run) {
    const auto j = derived_json(run.config());
    for (const auto& [k, v] : j.items()) run.say(k + " = " + format_number(v.get<double>()));
    run.write_json("derived.json", j);
    return ok;
}

inline int cmd_stability_map(Run& run) {
    const auto& o = run.options();
    const auto [clo, chi] = parse_pair(o.carrier_range, "--dc-range");
    const auto [slo, shi] = parse_pair(o.subcarrier_range, "--dsc-range");
    const auto map = map_detuning_plane(run.config(), {clo, chi}, {slo, shi}, o.grid, o.grid,
                                        constants::two_pi * o.omega_obs_hz);
    run.write_csv("stability_map.csv", map);

    std::map<std::string, std::size_t> counts;
    for (const auto& c : map.cells) ++counts[to_string(c.label)];
    ordered_json j;
    j["observation_frequency_hz"] = o.omega_obs_hz;
    j["power_ratio"] = map.power_ratio;
    j["carrier_points"] = map.carrier_axis.size();
    j["subcarrier_points"] = map.subcarrier_axis.size();
    for (const auto& [label, n] : counts) j["counts"][label] = n;
    const auto [ic, isc] = map.nearest(run.config().carrier.detuning, run.config().subcarrier.detuning);
    const auto& cell = map.at(ic, isc);
    j["configured_cell"] = {{"delta_c_over_gamma", cell.carrier_detuning},
                            {"delta_sc_over_gamma", cell.subcarrier_detuning},
                            {"label", to_string(cell.label)}};
    j["configured_cell_stable_region_size"] = stable_region_containing(map, ic, isc).size();
    run.write_json("stability_summary.json", j);
    run.say("cell (" + format_number(cell.carrier_detuning) + ", " +
            format_number(cell.subcarrier_detuning) + "): " + to_string(cell.label));
    for (const auto& [label, n] : counts) run.say(label + ": " + std::to_string(n));
    return ok;
}

inline int cmd_response(Run& run) {
    const auto& o = run.options();
    const auto& cfg = run.config();
    const auto bode = bode_sweep(cfg, o.f_min_hz, o.f_max_hz, o.points_per_decade);
    run.write_csv("bode.csv", bode);
    run.write_csv("bode_reference.csv", reference_sweep(cfg, o.f_min_hz, o.f_max_hz, o.points_per_decade));

    ordered_json j;
    j["fingerprint"] = bode.fingerprint;
    const auto est = extract_resonance(bode);
    j["extracted"] = resonance_json(est.resonance);
    j["extracted"]["method"] = est.method == ExtractionMethod::HalfPower ? "half-power" : "complex-fit";
    j["extracted"]["q_lower_bound"] = est.q_lower_bound;
    j["extracted"]["stable"] = est.resonance.gamma_eff > 0.0;
    const auto check = eigen_check(cfg);
    j["analytic"] = resonance_json(check.resonance);
    j["analytic"]["stable"] = check.stable;
    run.write_json("resonance.json", j);
    run.say("extracted f_eff = " + format_number(est.resonance.omega_eff / constants::two_pi) +
            " Hz, gamma_eff = " + format_number(est.resonance.gamma_eff) + " 1/s (" +
            (est.resonance.gamma_eff > 0.0 ? "stable" : "unstable") + ")");
    run.say("analytic  f_eff = " + format_number(check.resonance.omega_eff / constants::two_pi) +
            " Hz, gamma_eff = " + format_number(check.resonance.gamma_eff) + " 1/s");
    return ok;
}

inline int cmd_temperature(Run& run) {
    const auto& o = run.options();
    const auto& cfg = run.config();
    const auto [lo, hi] = parse_pair(o.band, "--band");
    const auto sol = find_omega_eff(cfg);
    const double k_total = total_coefficients(cfg, sol.resonance.omega_eff).stiffness;

    SpectrumSeries spectrum;
    std::string source;
    if (!o.spectrum_path.empty()) {
        spectrum = csv::read_spectrum_file(o.spectrum_path);
        source = o.spectrum_path;
    } else {
        SimSettings s = cfg.sim;
        s.thermal_noise = true;
        s.initial_displacement = 0.0;
        s.external_drive.reset();
        if (!o.duration) s.duration = 4.0;
        s.downsample = 10;
        Simulator sim(cfg, s);
        const auto traj = sim.run();
        if (traj.diverged)
            throw NumericalError(NumericalFailure::Divergence, "thermal simulation: " + traj.divergence_reason);
        // 200 / duration leaves a factor-two margin on Welch's 100-bandwidth minimum
        spectrum = synth_spectrum(traj, 200.0 / s.duration).series;
        run.write_csv("spectrum.csv", spectrum);
        source = "simulated (thermal force only)";
    }
    const double x_rms = x_rms_band(spectrum, lo, hi);
    ThermalSummary summary;
    summary.x_rms_m = x_rms;
    summary.t_eff_k = t_eff_from_rms(k_total, x_rms);
    summary.occupation = occupation(summary.t_eff_k, sol.resonance.omega_eff);
    summary.band_lo_hz = lo;
    summary.band_hi_hz = hi;

    ordered_json j;
    j["t_eff_k"] = summary.t_eff_k;
    j["occupation"] = summary.occupation;
    j["x_rms_m"] = summary.x_rms_m;
    j["band_hz"] = {summary.band_lo_hz, summary.band_hi_hz};
    j["spectrum_source"] = source;
    j["k_total_at_omega_eff_n_per_m"] = k_total;
    j["resonance"] = resonance_json(sol.resonance);
    if (sol.resonance.gamma_eff > 0.0)
        j["t_eff_from_damping_k"] = t_eff_from_damping(cfg.bath.temperature, cfg.mirrors, sol.resonance);
    run.write_json("thermal_summary.json", j);
    run.say("x_rms = " + format_number(x_rms) + " m, T_eff = " + format_number(summary.t_eff_k) +
            " K, N = " + format_number(summary.occupation));
    return ok;
}

inline int cmd_simulate(Run& run) {
    const auto& cfg = run.config();
    Simulator sim(cfg, cfg.sim);
    const auto traj = sim.run();
    run.write_csv("trajectory.csv", traj);

    ordered_json j;
    j["samples"] = traj.size();
    j["sample_interval_s"] = traj.sample_interval;
    j["diverged"] = traj.diverged;
    if (traj.diverged) {
        j["divergence_time_s"] = traj.divergence_time;
        j["divergence_reason"] = traj.divergence_reason;
    }
    int code = ok;
    try {
        const auto fit = estimate_growth_rate(traj);
        j["growth_rate_per_s"] = fit.rate;
        j["growth_rate_stderr_per_s"] = fit.rate_stderr;
        j["r_squared"] = fit.r_squared;
        j["peaks"] = fit.peaks;
        run.say("growth rate = " + format_number(fit.rate) + " 1/s (+/- " +
                format_number(fit.rate_stderr) + ")");
    } catch (const NumericalError& e) {
        j["growth_rate_error"] = e.what();
        run.say(std::string("growth rate unavailable: ") + e.what());
        code = numerical_failure;
    }
    try {
        const auto sol = find_omega_eff(cfg);
        j["predicted_growth_rate_per_s"] = -0.5 * sol.resonance.gamma_eff;
    } catch (const NumericalError&) {
    }
    run.write_json("growth.json", j);
    if (traj.diverged) {
        run.say("trajectory diverged: " + traj.divergence_reason);
        code = numerical_failure;
    }
    return code;
}

struct OracleLine {
    std::string name;
    bool pass;
    std::string detail;
};

/// Finite-difference static oracle, frozen-mirror field normalisation, and
/// the time-domain transfer-function and growth-rate checks.
inline std::vector<OracleLine> oracle_suite(const ExperimentConfig& base, std::size_t points) {
    std::vector<OracleLine> lines;
    const auto derived = derive_cavity(base.cavity);
    const double gamma = derived.linewidth_hwhm;

    for (double x : {-3.0, -1.0, -0.5, -0.3, 0.3, 0.5, 1.0, 3.0}) {
        FieldDrive field{base.carrier.input_power > 0.0 ? base.carrier.input_power : 1.0, x,
                         FieldLabel::Carrier};
        const double h = 1e-6 * gamma / derived.detuning_per_length;
        auto force = [&](double dl) {
            FieldDrive f = field;
            f.detuning = x + derived.detuning_per_length * dl / gamma;
            return radiation_force(intracavity_power(f, derived));
        };
        const double k_fd = -(force(h) - force(-h)) / (2.0 * h);
        const double k = k_at(make_field_input(field, base.cavity, base.mirrors), 0.0);
        const double rel = std::abs(k_fd - k) / std::abs(k);
        lines.push_back({"static x=" + format_number(x), rel < 1e-3, "rel err " + format_number(rel)});
    }

    for (double x : {0.0, 1.0, -5.0}) {
        ExperimentConfig cfg = base;
        cfg.carrier.detuning = x;
        SimSettings s;
        s.mechanics_enabled = false;
        s.cold_start_fields = true;
        s.initial_displacement = 0.0;
        s.duration = 40.0 / gamma;
        Simulator sim(cfg, s);
        SimState st = sim.initial_state();
        const auto n = static_cast<std::size_t>(std::llround(s.duration / s.time_step));
        for (std::size_t i = 0; i < n; ++i) st = sim.step(st, static_cast<double>(i) * s.time_step);
        const double expect = intracavity_power(cfg.carrier, derived);
        const double rel = std::abs(std::norm(st.fields[0]) - expect) / expect;
        lines.push_back({"frozen-mirror power x=" + format_number(x), rel < 1e-3,
                         "rel err " + format_number(rel)});
    }

    {
        const auto cfg = preset_config('d', base);
        std::vector<double> freqs(points);
        for (std::size_t i = 0; i < points; ++i)
            freqs[i] = 0.01 * gamma * std::pow(300.0, static_cast<double>(i) / static_cast<double>(points - 1)) /
                       constants::two_pi;
        const auto numeric = numeric_transfer_function(cfg, freqs);
        double worst_mag = 0.0, worst_phase = 0.0;
        for (const auto& p : numeric.points) {
            const auto h = susceptibility(cfg, p.frequency);
            worst_mag = std::max(worst_mag, std::abs(p.magnitude - std::abs(h)) / std::abs(h));
            double dphi = std::remainder(p.phase - std::arg(h), constants::two_pi);
            worst_phase = std::max(worst_phase, std::abs(dphi) * 180.0 / constants::pi);
        }
        lines.push_back({"transfer function magnitude (preset d)", worst_mag < 0.01,
                         "worst rel err " + format_number(worst_mag)});
        lines.push_back({"transfer function phase (preset d)", worst_phase < 2.0,
                         "worst err deg " + format_number(worst_phase)});
    }

    {
        const auto cfg = preset_config('c', base);
        const auto sol = find_omega_eff(cfg);
        const double predicted = -0.5 * sol.resonance.gamma_eff;
        SimSettings s;
        s.initial_displacement = 1e-15;
        s.duration = 0.02;
        Simulator sim(cfg, s);
        const auto traj = sim.run();
        const auto fit = estimate_growth_rate(traj);
        const double rel = std::abs(fit.rate - predicted) / std::abs(predicted);
        lines.push_back({"growth rate (preset c)", !traj.diverged && rel < 0.1,
                         "measured " + format_number(fit.rate) + " predicted " +
                             format_number(predicted)});
    }
    return lines;
}

inline int cmd_oracle_check(Run& run) {
    const auto lines = oracle_suite(run.config(), run.options().oracle_points);
    ordered_json j = ordered_json::array();
    bool all = true;
    for (const auto& l : lines) {
        all = all && l.pass;
        j.push_back({{"check", l.name}, {"pass", l.pass}, {"detail", l.detail}});
        run.say(std::string(l.pass ? "PASS " : "FAIL ") + l.name + " (" + l.detail + ")");
    }
    run.write_json("oracle_report.json", j);
    return all ? ok : oracle_failure;
}

} // namespace detail

/// Parses arguments and dispatches. Returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Double optical spring simulator and analysis toolkit"};
    app.require_subcommand(1);
    Options o;
    if (const char* env = std::getenv(config_env_var)) o.config_path = env;
    app.add_option("--config", o.config_path, "configuration YAML (default: $OPTOSPRING_CONFIG)");
    app.add_option("--out", o.out_dir, "output directory");
    app.add_option("--seed", o.seed, "random seed override");
    app.add_option("--preset", o.preset, "curve preset")->check(CLI::IsMember({"a", "b", "c", "d"}));
    app.add_option("--grid", o.grid, "grid points per axis")->check(CLI::Range(2, 100000));
    app.add_option("--omega-obs", o.omega_obs_hz, "observation frequency [Hz]");
    app.add_option("--band", o.band, "integration band LO:HI [Hz]");
    app.add_option("--duration", o.duration, "simulation duration [s]");
    app.add_flag("--quiet", o.quiet, "suppress console output");
    app.add_option("--spectrum", o.spectrum_path, "spectrum CSV for the temperature command");
    app.add_option("--fmin", o.f_min_hz, "sweep start [Hz]");
    app.add_option("--fmax", o.f_max_hz, "sweep stop [Hz]");
    app.add_option("--ppd", o.points_per_decade, "sweep points per decade");
    app.add_option("--dc-range", o.carrier_range, "carrier detuning range LO:HI [gamma]");
    app.add_option("--dsc-range", o.subcarrier_range, "subcarrier detuning range LO:HI [gamma]");
    app.add_option("--oracle-points", o.oracle_points, "transfer-function points")->check(CLI::Range(2, 1000));

    using Handler = int (*)(detail::Run&);
    const std::vector<std::pair<std::string, Handler>> commands{
        {"derive", detail::cmd_derive},
        {"stability-map", detail::cmd_stability_map},
        {"response", detail::cmd_response},
        {"temperature", detail::cmd_temperature},
        {"simulate", detail::cmd_simulate},
        {"oracle-check", detail::cmd_oracle_check},
    };
    const std::map<std::string, std::string> help{
        {"derive", "print derived cavity quantities"},
        {"stability-map", "detuning-plane stability map CSV"},
        {"response", "Bode CSV of the mirror susceptibility"},
        {"temperature", "effective temperature and occupation summary"},
        {"simulate", "time-domain trajectory and growth-rate report"},
        {"oracle-check", "static and dynamic oracle suites"},
    };
    for (const auto& [name, handler] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return validation_failure;
    }

    std::string command;
    Handler handler = nullptr;
    for (const auto& [name, h] : commands)
        if (app.got_subcommand(name)) { command = name; handler = h; }

    try {
        ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : parse_config(o.config_path);
        if (!o.preset.empty()) cfg = preset_config(o.preset[0], cfg);
        if (o.seed) cfg.sim.seed = *o.seed;
        if (o.duration) cfg.sim.duration = *o.duration;
        validate(cfg);
        detail::Run run_ctx(command, args, o, cfg, out);
        int code = ok;
        std::string error;
        try {
            code = handler(run_ctx);
        } catch (const ValidationError& e) {
            error = std::string("error: ") + e.what();
            code = validation_failure;
        } catch (const NumericalError& e) {
            error = std::string("numerical failure: ") + e.what();
            code = numerical_failure;
        }
        if (!error.empty()) err << error << '\n';
        run_ctx.finish(code, error);
        return code;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return validation_failure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return validation_failure;
    }
}

} // namespace optospring::cli
