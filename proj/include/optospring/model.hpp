#pragma once

#include <cmath>
#include <string>

#include "optospring/constants.hpp"
#include "optospring/errors.hpp"

namespace optospring {

struct CavityGeometry {
    double length = 0.9;                 // m
    double input_transmission = 8e-4;    // power transmission of the input mirror
    double wavelength = 1064e-9;         // m
};

/// Quantities that follow from the cavity geometry. Never entered directly.
struct DerivedCavity {
    double linewidth_hwhm = 0.0;      // gamma [rad/s]
    double free_spectral_range = 0.0; // [Hz]
    double resonant_gain = 0.0;       // circulating / input power on resonance
    double detuning_per_length = 0.0; // d(delta)/dL [rad/s per m]
};

struct MirrorMechanics {
    double end_mass = 1e-3;      // kg
    double input_mass = 0.25;    // kg
    double natural_frequency = 0.0;  // Omega_m [rad/s]
    double quality_factor = 0.0;     // Q_m
    double mechanical_damping = 0.0; // Gamma_m = Omega_m / Q_m [1/s]

    static MirrorMechanics make(double end_mass, double input_mass, double natural_frequency,
                                double quality_factor) {
        return {end_mass, input_mass, natural_frequency, quality_factor,
                natural_frequency / quality_factor};
    }
};

enum class FieldLabel { Carrier, Subcarrier };

inline const char* to_string(FieldLabel label) {
    return label == FieldLabel::Carrier ? "carrier" : "subcarrier";
}

struct FieldDrive {
    double input_power = 0.0; // I0 [W]
    double detuning = 0.0;    // delta / gamma
    FieldLabel label = FieldLabel::Carrier;
};

struct BathState {
    double temperature = 293.0; // K
};

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw ValidationError(field + " " + rule);
}

inline bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace detail

inline void validate(const CavityGeometry& g) {
    detail::require(detail::finite_positive(g.length), "cavity.length_m", "must be > 0");
    detail::require(std::isfinite(g.input_transmission) && g.input_transmission > 0.0 &&
                        g.input_transmission < 1.0,
                    "cavity.input_transmission", "must lie in (0, 1)");
    detail::require(detail::finite_positive(g.wavelength), "cavity.wavelength_m", "must be > 0");
}

inline void validate(const MirrorMechanics& m) {
    detail::require(detail::finite_positive(m.end_mass), "mirrors.end_mass_kg", "must be > 0");
    detail::require(detail::finite_positive(m.input_mass), "mirrors.input_mass_kg", "must be > 0");
    detail::require(detail::finite_positive(m.natural_frequency), "mirrors.natural_frequency_hz",
                    "must be > 0");
    detail::require(detail::finite_positive(m.quality_factor), "mirrors.quality_factor",
                    "must be > 0");
    detail::require(detail::finite_positive(m.mechanical_damping), "mirrors.mechanical_damping",
                    "must be > 0");
    const double rel = std::abs(m.mechanical_damping * m.quality_factor - m.natural_frequency) /
                       m.natural_frequency;
    detail::require(rel <= 1e-12, "mirrors.mechanical_damping",
                    "must equal natural_frequency / quality_factor");
}

inline void validate(const FieldDrive& f) {
    const std::string prefix = to_string(f.label);
    detail::require(std::isfinite(f.input_power) && f.input_power >= 0.0,
                    prefix + ".input_power_w", "must be >= 0");
    detail::require(std::isfinite(f.detuning), prefix + ".detuning_over_gamma", "must be finite");
}

inline void validate(const BathState& b) {
    detail::require(std::isfinite(b.temperature) && b.temperature >= 0.0, "bath.temperature_k",
                    "must be >= 0");
}

/// Linewidth, gain and FSR of a lossless-except-input-coupler cavity.
///
/// The detuning sensitivity follows from the resonance condition
/// omega_res = 2 pi n c / (2L): lengthening the cavity by dL lowers the
/// resonance by omega_res dL / L, which raises the laser-minus-cavity detuning
/// by (2 pi c / lambda) dL / L. With this sign a positive detuning gives a
/// restoring static spring, and the finite difference of 2P/c over length
/// reproduces the closed-form dc spring constant exactly.
inline DerivedCavity derive_cavity(const CavityGeometry& geometry) {
    validate(geometry);
    const double c = constants::speed_of_light;
    DerivedCavity d;
    d.linewidth_hwhm = geometry.input_transmission * c / (4.0 * geometry.length);
    d.free_spectral_range = c / (2.0 * geometry.length);
    d.resonant_gain = 4.0 / geometry.input_transmission;
    d.detuning_per_length = constants::two_pi * c / (geometry.wavelength * geometry.length);
    return d;
}

inline double reduced_mass(double m1, double m2) {
    detail::require(detail::finite_positive(m1) && detail::finite_positive(m2), "mirrors",
                    "masses must be > 0");
    return m1 * m2 / (m1 + m2);
}

inline double reduced_mass(const MirrorMechanics& mech) {
    return reduced_mass(mech.end_mass, mech.input_mass);
}

/// Static circulating power: a Lorentzian in detuning, peaked at the resonant gain.
inline double intracavity_power(const FieldDrive& field, const DerivedCavity& derived) {
    const double x = field.detuning;
    return derived.resonant_gain * field.input_power / (1.0 + x * x);
}

/// Normal-incidence radiation pressure force of a circulating beam.
inline double radiation_force(double circulating_power) {
    return 2.0 * circulating_power / constants::speed_of_light;
}

} // namespace optospring
