#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "optospring/stability.hpp"

namespace optospring {

/// Single-sided displacement amplitude spectral density.
struct SpectrumSeries {
    std::vector<double> frequency_hz;
    std::vector<double> asd; // m/sqrt(Hz)
};

inline void validate(const SpectrumSeries& s) {
    if (s.frequency_hz.size() != s.asd.size())
        throw ValidationError("spectrum: frequency and asd columns differ in length");
    for (std::size_t i = 0; i < s.asd.size(); ++i) {
        if (!(s.asd[i] >= 0.0) || !std::isfinite(s.asd[i]))
            throw ValidationError("spectrum: asd values must be finite and >= 0");
        if (i > 0 && !(s.frequency_hz[i] > s.frequency_hz[i - 1]))
            throw ValidationError("spectrum: frequencies must be strictly increasing");
    }
}

struct ThermalSummary {
    double t_eff_k = 0.0;
    double occupation = 0.0;
    double x_rms_m = 0.0;
    double band_lo_hz = 0.0;
    double band_hi_hz = 0.0;
};

/// Single-sided thermal force PSD 4 k_B T M G_m [N^2/Hz]
/// (velocity-damping fluctuation-dissipation form).
inline double thermal_force_psd(const BathState& bath, const MirrorMechanics& mech,
                                double reduced_mass) {
    return 4.0 * constants::boltzmann * bath.temperature * reduced_mass * mech.mechanical_damping;
}

/// T_eff = T G_m / Gamma_eff. Undefined for an unstable mode.
inline double t_eff_from_damping(double temperature, const MirrorMechanics& mech,
                                 const EffectiveResonance& resonance) {
    if (!(resonance.gamma_eff > 0.0))
        throw ValidationError("effective temperature requires gamma_eff > 0 (stable mode)");
    return temperature * mech.mechanical_damping / resonance.gamma_eff;
}

/// Same quantity written through frequencies and quality factors:
/// T (Om_m / Om_eff) (Q_eff / Q_m).
inline double t_eff_from_quality(double temperature, const MirrorMechanics& mech,
                                 const EffectiveResonance& resonance) {
    if (!(resonance.gamma_eff > 0.0))
        throw ValidationError("effective temperature requires gamma_eff > 0 (stable mode)");
    return temperature * (mech.natural_frequency / resonance.omega_eff) *
           (resonance.q_eff / mech.quality_factor);
}

/// Mean phonon number k_B T / (hbar Om).
inline double occupation(double t_eff, double omega_eff) {
    if (!(omega_eff > 0.0)) throw ValidationError("occupation requires omega_eff > 0");
    return constants::boltzmann * t_eff / (constants::reduced_planck * omega_eff);
}

/// sqrt of the trapezoidal integral of ASD^2 over [f_lo, f_hi]. Band edges that
/// fall between samples are linearly interpolated in ASD^2.
inline double x_rms_band(const SpectrumSeries& spectrum, double f_lo, double f_hi) {
    validate(spectrum);
    const auto& f = spectrum.frequency_hz;
    if (f.size() < 2) throw ValidationError("spectrum needs at least two points");
    if (!(f_lo < f_hi)) throw ValidationError("band must satisfy f_lo < f_hi");
    if (f_lo < f.front() || f_hi > f.back())
        throw ValidationError("band lies outside the spectrum's frequency span");

    auto power_at = [&](double x) {
        const auto it = std::upper_bound(f.begin(), f.end(), x);
        const std::size_t j = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - f.begin(), 1), f.size() - 1);
        const double p0 = spectrum.asd[j - 1] * spectrum.asd[j - 1];
        const double p1 = spectrum.asd[j] * spectrum.asd[j];
        const double t = (x - f[j - 1]) / (f[j] - f[j - 1]);
        return p0 + t * (p1 - p0);
    };

    double integral = 0.0;
    double x_prev = f_lo, p_prev = power_at(f_lo);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] <= f_lo) continue;
        if (f[i] >= f_hi) break;
        const double p = spectrum.asd[i] * spectrum.asd[i];
        integral += 0.5 * (p + p_prev) * (f[i] - x_prev);
        x_prev = f[i];
        p_prev = p;
    }
    integral += 0.5 * (power_at(f_hi) + p_prev) * (f_hi - x_prev);
    return std::sqrt(integral);
}

/// Equipartition: K x_rms^2 = k_B T_eff.
inline double t_eff_from_rms(double k_total, double x_rms) {
    if (!(k_total > 0.0)) throw ValidationError("t_eff_from_rms requires k_total > 0");
    return k_total * x_rms * x_rms / constants::boltzmann;
}

/// Cavity length change equivalent to a laser frequency excursion:
/// dL = L dnu / nu = L lambda dnu / c. Used to calibrate the error signal.
inline double frequency_noise_to_displacement(const CavityGeometry& geometry, double delta_nu) {
    if (!(delta_nu >= 0.0)) throw ValidationError("frequency excursion must be >= 0");
    return geometry.length * geometry.wavelength * delta_nu / constants::speed_of_light;
}

} // namespace optospring
