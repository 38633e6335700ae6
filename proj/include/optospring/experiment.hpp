#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>

#include "optospring/model.hpp"
#include "optospring/spring.hpp"

namespace optospring {

struct ExternalDrive {
    double amplitude = 0.0; // N
    double frequency = 0.0; // Hz
};

/// Time-domain integrator knobs. Defaults resolve the cavity pole with
/// gamma * dt ~ 0.07 for the shipped cavity.
struct SimSettings {
    double time_step = 1e-6;           // s
    double duration = 0.02;            // s
    std::uint64_t seed = 1;
    bool thermal_noise = false;
    double frequency_noise_asd = 0.0;  // laser frequency noise [Hz/sqrt(Hz)]
    std::optional<ExternalDrive> external_drive;
    bool adiabatic = false;            // slave fields to the instantaneous Lorentzian
    bool mechanics_enabled = true;     // false freezes the mirror
    bool cold_start_fields = false;    // start with empty cavity instead of steady state
    double initial_displacement = 1e-15; // m, small kick
    double initial_velocity = 0.0;     // m/s
    std::uint32_t downsample = 1;      // record every Nth step
};

struct ExperimentConfig {
    CavityGeometry cavity;
    MirrorMechanics mirrors = MirrorMechanics::make(1e-3, 0.25, constants::two_pi * 172.0, 3200.0);
    FieldDrive carrier{3.1288752202819468, 3.0, FieldLabel::Carrier};
    FieldDrive subcarrier{3.1288752202819468 / 20.0, -0.3, FieldLabel::Subcarrier};
    BathState bath;
    SimSettings sim;
    double spot_area = 1.5e-6;                // m^2
    std::optional<double> total_laser_power;  // W, optional budget check

    std::array<FieldDrive, 2> fields() const { return {carrier, subcarrier}; }
};

inline void validate(const SimSettings& s, const DerivedCavity& derived) {
    detail::require(detail::finite_positive(s.time_step), "sim.time_step_s", "must be > 0");
    if (!s.adiabatic) {
        detail::require(s.time_step * derived.linewidth_hwhm < 0.2, "sim.time_step_s",
                        "must satisfy gamma * dt < 0.2 in full mode");
    }
    detail::require(std::isfinite(s.duration) && s.duration >= 100.0 * s.time_step,
                    "sim.duration_s", "must be >= 100 time steps");
    detail::require(std::isfinite(s.frequency_noise_asd) && s.frequency_noise_asd >= 0.0,
                    "sim.frequency_noise_asd_hz_per_rthz", "must be >= 0");
    detail::require(s.downsample >= 1, "sim.downsample", "must be >= 1");
    detail::require(std::isfinite(s.initial_displacement), "sim.initial_displacement_m",
                    "must be finite");
    if (s.external_drive) {
        detail::require(std::isfinite(s.external_drive->amplitude), "sim.drive_amplitude_n",
                        "must be finite");
        detail::require(std::isfinite(s.external_drive->frequency) &&
                            s.external_drive->frequency >= 0.0,
                        "sim.drive_frequency_hz", "must be >= 0");
    }
}

inline void validate(const ExperimentConfig& cfg) {
    validate(cfg.cavity);
    validate(cfg.mirrors);
    validate(cfg.carrier);
    validate(cfg.subcarrier);
    validate(cfg.bath);
    detail::require(detail::finite_positive(cfg.spot_area), "spot_area_m2", "must be > 0");
    if (cfg.total_laser_power) {
        detail::require(cfg.carrier.input_power + cfg.subcarrier.input_power <=
                            *cfg.total_laser_power,
                        "laser.total_power_w", "must cover carrier + subcarrier power");
    }
    validate(cfg.sim, derive_cavity(cfg.cavity));
}

inline std::array<FieldSpringInput, 2> field_inputs(const ExperimentConfig& cfg) {
    return {make_field_input(cfg.carrier, cfg.cavity, cfg.mirrors),
            make_field_input(cfg.subcarrier, cfg.cavity, cfg.mirrors)};
}

inline SpringCoefficients total_coefficients(const ExperimentConfig& cfg, double omega) {
    const auto inputs = field_inputs(cfg);
    return combine(inputs, omega);
}

/// Copy of the configuration with both optical fields switched off.
inline ExperimentConfig without_optical_spring(ExperimentConfig cfg) {
    cfg.carrier.input_power = 0.0;
    cfg.subcarrier.input_power = 0.0;
    return cfg;
}

/// Short hex tag identifying the physical parameters of a configuration.
inline std::string fingerprint(const ExperimentConfig& cfg) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
                  cfg.cavity.length, cfg.cavity.input_transmission, cfg.cavity.wavelength,
                  cfg.mirrors.end_mass, cfg.mirrors.input_mass, cfg.mirrors.natural_frequency,
                  cfg.mirrors.quality_factor, cfg.carrier.input_power, cfg.carrier.detuning,
                  cfg.subcarrier.input_power, cfg.subcarrier.detuning);
    // FNV-1a, stable across platforms unlike std::hash.
    std::uint64_t h = 1469598103934665603ull;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ull;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

} // namespace optospring
