#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "optospring/experiment.hpp"
#include "optospring/format.hpp"

namespace optospring {

/// Malformed configuration text. Carries the 1-based line number.
class ConfigParseError : public ValidationError {
public:
    ConfigParseError(int line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

namespace detail {

// Hz value whose 2 pi multiple reproduces `omega` bit-for-bit, so that
// serialise -> parse is exact.
inline double hz_for(double omega) {
    double f = omega / constants::two_pi;
    if (constants::two_pi * f == omega) return f;
    double lo = f, hi = f;
    for (int i = 0; i < 8; ++i) {
        lo = std::nextafter(lo, 0.0);
        hi = std::nextafter(hi, INFINITY);
        if (constants::two_pi * lo == omega) return lo;
        if (constants::two_pi * hi == omega) return hi;
    }
    return f;
}

class SectionReader {
public:
    SectionReader(const YAML::Node& root, std::string name) : name_(std::move(name)) {
        const YAML::Node n = name_.empty() ? root : root[name_];
        if (!n) return;
        // reset() rebinds; operator= would assign into the node.
        node_.reset(n);
        present_ = true;
        if (!node_.IsMap())
            throw ConfigParseError(node_.Mark().line + 1, "section '" + name_ + "' must be a mapping");
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!present_ || !node_[key]) return;
        const YAML::Node v = node_[key];
        try {
            out = v.as<T>();
        } catch (const YAML::BadConversion&) {
            throw ConfigParseError(v.Mark().line + 1, "cannot convert " + qualified(key));
        }
    }

    template <typename T>
    bool read_optional(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!present_ || !node_[key]) return false;
        T v{};
        read(key, v);
        out = v;
        return true;
    }

    /// Rejects keys that were never asked for (typos would otherwise be silent).
    void finish(const std::set<std::string>& nested = {}) const {
        if (!present_) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key) && !nested.count(key))
                throw ValidationError("unknown configuration key " + qualified(key));
        }
    }

private:
    std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    std::string name_;
    YAML::Node node_;
    bool present_ = false;
    std::set<std::string> seen_;
};

} // namespace detail

/// Reads configuration YAML. Missing keys take the shipped defaults (the
/// gram-scale experiment with preset d detunings); the result is validated.
inline ExperimentConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigParseError(e.mark.line + 1, e.msg);
    }
    ExperimentConfig cfg;
    if (root.IsNull()) {
        validate(cfg);
        return cfg;
    }
    if (!root.IsMap()) throw ConfigParseError(root.Mark().line + 1, "top level must be a mapping");

    {
        detail::SectionReader r(root, "cavity");
        r.read("length_m", cfg.cavity.length);
        r.read("input_transmission", cfg.cavity.input_transmission);
        r.read("wavelength_m", cfg.cavity.wavelength);
        r.finish();
    }
    {
        detail::SectionReader r(root, "mirrors");
        double f_hz = detail::hz_for(cfg.mirrors.natural_frequency);
        r.read("end_mass_kg", cfg.mirrors.end_mass);
        r.read("input_mass_kg", cfg.mirrors.input_mass);
        r.read("natural_frequency_hz", f_hz);
        r.read("quality_factor", cfg.mirrors.quality_factor);
        r.finish();
        cfg.mirrors = MirrorMechanics::make(cfg.mirrors.end_mass, cfg.mirrors.input_mass,
                                            constants::two_pi * f_hz, cfg.mirrors.quality_factor);
    }
    for (auto* field : {&cfg.carrier, &cfg.subcarrier}) {
        detail::SectionReader r(root, to_string(field->label));
        r.read("input_power_w", field->input_power);
        r.read("detuning_over_gamma", field->detuning);
        r.finish();
    }
    {
        detail::SectionReader r(root, "bath");
        r.read("temperature_k", cfg.bath.temperature);
        r.finish();
    }
    {
        detail::SectionReader r(root, "laser");
        r.read_optional("total_power_w", cfg.total_laser_power);
        r.finish();
    }
    {
        auto& s = cfg.sim;
        detail::SectionReader r(root, "sim");
        r.read("time_step_s", s.time_step);
        r.read("duration_s", s.duration);
        r.read("seed", s.seed);
        r.read("thermal_noise", s.thermal_noise);
        r.read("frequency_noise_asd_hz_per_rthz", s.frequency_noise_asd);
        std::optional<double> amp, freq;
        r.read_optional("drive_amplitude_n", amp);
        r.read_optional("drive_frequency_hz", freq);
        if (amp || freq) s.external_drive = ExternalDrive{amp.value_or(0.0), freq.value_or(0.0)};
        r.read("adiabatic", s.adiabatic);
        r.read("mechanics_enabled", s.mechanics_enabled);
        r.read("cold_start_fields", s.cold_start_fields);
        r.read("initial_displacement_m", s.initial_displacement);
        r.read("initial_velocity_m_per_s", s.initial_velocity);
        r.read("downsample", s.downsample);
        r.finish();
    }
    {
        detail::SectionReader r(root, "");
        r.read("spot_area_m2", cfg.spot_area);
        r.finish({"cavity", "mirrors", "carrier", "subcarrier", "bath", "laser", "sim"});
    }
    validate(cfg);
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open configuration file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Canonical YAML for a configuration; parse_config_text reproduces it exactly.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    YAML::Emitter out;
    const auto num = [](double v) { return YAML::Node(format_number(v)); };
    out << YAML::BeginMap;
    out << YAML::Key << "cavity" << YAML::Value << YAML::BeginMap
        << YAML::Key << "length_m" << YAML::Value << num(cfg.cavity.length)
        << YAML::Key << "input_transmission" << YAML::Value << num(cfg.cavity.input_transmission)
        << YAML::Key << "wavelength_m" << YAML::Value << num(cfg.cavity.wavelength) << YAML::EndMap;
    out << YAML::Key << "mirrors" << YAML::Value << YAML::BeginMap
        << YAML::Key << "end_mass_kg" << YAML::Value << num(cfg.mirrors.end_mass)
        << YAML::Key << "input_mass_kg" << YAML::Value << num(cfg.mirrors.input_mass)
        << YAML::Key << "natural_frequency_hz" << YAML::Value << num(detail::hz_for(cfg.mirrors.natural_frequency))
        << YAML::Key << "quality_factor" << YAML::Value << num(cfg.mirrors.quality_factor) << YAML::EndMap;
    for (const auto* field : {&cfg.carrier, &cfg.subcarrier}) {
        out << YAML::Key << to_string(field->label) << YAML::Value << YAML::BeginMap
            << YAML::Key << "input_power_w" << YAML::Value << num(field->input_power)
            << YAML::Key << "detuning_over_gamma" << YAML::Value << num(field->detuning) << YAML::EndMap;
    }
    out << YAML::Key << "bath" << YAML::Value << YAML::BeginMap
        << YAML::Key << "temperature_k" << YAML::Value << num(cfg.bath.temperature) << YAML::EndMap;
    if (cfg.total_laser_power) {
        out << YAML::Key << "laser" << YAML::Value << YAML::BeginMap
            << YAML::Key << "total_power_w" << YAML::Value << num(*cfg.total_laser_power) << YAML::EndMap;
    }
    const auto& s = cfg.sim;
    out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap
        << YAML::Key << "time_step_s" << YAML::Value << num(s.time_step)
        << YAML::Key << "duration_s" << YAML::Value << num(s.duration)
        << YAML::Key << "seed" << YAML::Value << s.seed
        << YAML::Key << "thermal_noise" << YAML::Value << s.thermal_noise
        << YAML::Key << "frequency_noise_asd_hz_per_rthz" << YAML::Value << num(s.frequency_noise_asd);
    if (s.external_drive) {
        out << YAML::Key << "drive_amplitude_n" << YAML::Value << num(s.external_drive->amplitude)
            << YAML::Key << "drive_frequency_hz" << YAML::Value << num(s.external_drive->frequency);
    }
    out << YAML::Key << "adiabatic" << YAML::Value << s.adiabatic
        << YAML::Key << "mechanics_enabled" << YAML::Value << s.mechanics_enabled
        << YAML::Key << "cold_start_fields" << YAML::Value << s.cold_start_fields
        << YAML::Key << "initial_displacement_m" << YAML::Value << num(s.initial_displacement)
        << YAML::Key << "initial_velocity_m_per_s" << YAML::Value << num(s.initial_velocity)
        << YAML::Key << "downsample" << YAML::Value << s.downsample << YAML::EndMap;
    out << YAML::Key << "spot_area_m2" << YAML::Value << num(cfg.spot_area);
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace optospring
