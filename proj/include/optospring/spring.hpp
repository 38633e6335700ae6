#pragma once

#include <cmath>
#include <span>

#include "optospring/model.hpp"

namespace optospring {

/// Optical response at one frequency. Positive stiffness restores; positive
/// damping is ANTI-damping, so the mirror obeys
///   M x'' = -M Om_m^2 x - M G_m x' - K x + M Gamma x' + F_ext.
struct SpringCoefficients {
    double stiffness = 0.0; // K [N/m]
    double damping = 0.0;   // Gamma [1/s]
    double frequency = 0.0; // Omega [rad/s]

    SpringCoefficients& operator+=(const SpringCoefficients& other) {
        stiffness += other.stiffness;
        damping += other.damping;
        return *this;
    }
};

struct FieldSpringInput {
    FieldDrive field;
    DerivedCavity derived;
    double reduced_mass = 0.0;       // kg
    double wavelength = 0.0;         // m
    double input_transmission = 0.0;
};

inline FieldSpringInput make_field_input(const FieldDrive& field, const CavityGeometry& geometry,
                                         const MirrorMechanics& mech) {
    return {field, derive_cavity(geometry), reduced_mass(mech), geometry.wavelength,
            geometry.input_transmission};
}

namespace detail {

struct SpringTerms {
    double b;     // 1 + x^2 - u^2
    double denom; // b^2 + 4 u^2
};

inline SpringTerms spring_terms(const FieldSpringInput& in, double omega) {
    const double x = in.field.detuning;
    const double u = omega / in.derived.linewidth_hwhm;
    const double b = 1.0 + x * x - u * u;
    return {b, b * b + 4.0 * u * u};
}

} // namespace detail

/// Static rigidity scale, 128 pi I0 x / (T^2 c lambda (1 + x^2)). Odd in x.
inline double k0(const FieldSpringInput& in) {
    const double x = in.field.detuning;
    const double t = in.input_transmission;
    return 128.0 * constants::pi * in.field.input_power * x /
           (t * t * constants::speed_of_light * in.wavelength * (1.0 + x * x));
}

/// Frequency-dependent spring constant K0 B / (B^2 + 4u^2).
inline double k_at(const FieldSpringInput& in, double omega) {
    const double k = k0(in);
    if (k == 0.0) return 0.0;
    const auto [b, denom] = detail::spring_terms(in, omega);
    return k * b / denom;
}

// Written as 2 K0 / (M gamma (B^2 + 4u^2)) so it stays finite where B = 0;
// everywhere else it equals 2 K(Omega) / (M gamma B).
inline double gamma_at(const FieldSpringInput& in, double omega) {
    const double k = k0(in);
    if (k == 0.0) return 0.0;
    const auto [b, denom] = detail::spring_terms(in, omega);
    (void)b;
    return 2.0 * k / (in.reduced_mass * in.derived.linewidth_hwhm * denom);
}

/// Gamma/K in the Omega << gamma limit. Larger detuning means less damping per stiffness.
inline double damping_per_stiffness(const FieldSpringInput& in) {
    const double x = in.field.detuning;
    return (2.0 / (in.reduced_mass * in.derived.linewidth_hwhm)) / (1.0 + x * x);
}

inline SpringCoefficients field_coefficients(const FieldSpringInput& in, double omega) {
    return {k_at(in, omega), gamma_at(in, omega), omega};
}

/// Linear superposition over fields. The carrier/subcarrier beat at one FSR
/// averages out over mechanical time scales, so no interference term.
inline SpringCoefficients combine(std::span<const FieldSpringInput> fields, double omega) {
    SpringCoefficients total{0.0, 0.0, omega};
    if (fields.empty()) return total;
    const auto& ref = fields.front();
    for (const auto& f : fields) {
        const bool same = f.derived.linewidth_hwhm == ref.derived.linewidth_hwhm &&
                          f.derived.resonant_gain == ref.derived.resonant_gain &&
                          f.derived.detuning_per_length == ref.derived.detuning_per_length &&
                          f.reduced_mass == ref.reduced_mass && f.wavelength == ref.wavelength &&
                          f.input_transmission == ref.input_transmission;
        if (!same) throw ValidationError("fields must share one cavity and mirror pair");
        total += field_coefficients(f, omega);
    }
    return total;
}

} // namespace optospring
