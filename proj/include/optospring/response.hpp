#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "optospring/stability.hpp"

namespace optospring {

struct TransferPoint {
    double frequency = 0.0;       // rad/s
    double magnitude = 0.0;       // m/N
    double phase = 0.0;           // rad, principal value in (-pi, pi]
    double phase_unwrapped = 0.0; // rad, continuous along the sweep
    bool overflow = false;        // denominator vanished
};

struct BodeData {
    std::vector<TransferPoint> points;
    std::string fingerprint;
};

/// Displacement per force
///   H = 1 / (M [Om_m^2 - Om^2 + K_tot/M] + i Om M [G_m - Gamma_tot]).
/// Returns +inf when the denominator vanishes (exactly marginal).
inline std::complex<double> susceptibility(const ExperimentConfig& cfg, double omega) {
    const auto total = total_coefficients(cfg, omega);
    const double mass = reduced_mass(cfg.mirrors);
    const double wm = cfg.mirrors.natural_frequency;
    const std::complex<double> denom(mass * (wm * wm - omega * omega) + total.stiffness,
                                     omega * mass * (cfg.mirrors.mechanical_damping - total.damping));
    if (denom == std::complex<double>(0.0, 0.0))
        return {std::numeric_limits<double>::infinity(), 0.0};
    return 1.0 / denom;
}

/// Nearest-multiple continuation of principal phases.
inline void unwrap_phase(std::vector<TransferPoint>& points) {
    double offset = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0) {
            const double prev = points[i - 1].phase_unwrapped;
            const double raw = points[i].phase + offset;
            offset += constants::two_pi * std::round((prev - raw) / constants::two_pi);
        }
        points[i].phase_unwrapped = points[i].phase + offset;
    }
}

inline TransferPoint make_transfer_point(double omega, std::complex<double> h) {
    TransferPoint p;
    p.frequency = omega;
    if (!std::isfinite(h.real()) || !std::isfinite(h.imag())) {
        p.magnitude = std::numeric_limits<double>::infinity();
        p.overflow = true;
        return p;
    }
    p.magnitude = std::abs(h);
    p.phase = std::arg(h);
    if (p.phase == -constants::pi) p.phase = constants::pi;
    return p;
}

inline std::vector<double> log_frequencies_hz(double f_min, double f_max, double points_per_decade) {
    if (!(f_min > 0.0) || !(f_max > f_min))
        throw ValidationError("sweep range must satisfy 0 < f_min < f_max");
    if (!(points_per_decade > 0.0)) throw ValidationError("points_per_decade must be > 0");
    const double decades = std::log10(f_max / f_min);
    const auto n = static_cast<std::size_t>(std::ceil(decades * points_per_decade)) + 1;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i)
        f[i] = f_min * std::pow(10.0, decades * static_cast<double>(i) / static_cast<double>(n - 1));
    return f;
}

inline BodeData bode_sweep(const ExperimentConfig& cfg, double f_min_hz, double f_max_hz,
                           double points_per_decade) {
    BodeData out;
    out.fingerprint = fingerprint(cfg);
    for (double f : log_frequencies_hz(f_min_hz, f_max_hz, points_per_decade)) {
        const double w = constants::two_pi * f;
        out.points.push_back(make_transfer_point(w, susceptibility(cfg, w)));
    }
    unwrap_phase(out.points);
    return out;
}

/// The "no optical spring" reference curve over the same sweep.
inline BodeData reference_sweep(const ExperimentConfig& cfg, double f_min_hz, double f_max_hz,
                                double points_per_decade) {
    return bode_sweep(without_optical_spring(cfg), f_min_hz, f_max_hz, points_per_decade);
}

enum class ExtractionMethod { HalfPower, ComplexFit };

struct ResonanceEstimate {
    EffectiveResonance resonance;
    ExtractionMethod method = ExtractionMethod::HalfPower;
    bool q_lower_bound = false; // width unresolved: gamma is an upper bound
};

namespace detail {

// Least-squares fit of 1/H = k - m Om^2 + i c Om around the peak. Real and
// imaginary parts decouple: (k, m) from Re, c from Im.
inline EffectiveResonance complex_resonance_fit(const std::vector<TransferPoint>& pts,
                                                std::size_t first, std::size_t last) {
    double s00 = 0, s01 = 0, s11 = 0, r0 = 0, r1 = 0, sim = 0, sww = 0;
    for (std::size_t i = first; i <= last; ++i) {
        const auto& p = pts[i];
        const std::complex<double> inv =
            1.0 / std::polar(p.magnitude, p.phase_unwrapped);
        const double w2 = p.frequency * p.frequency;
        // Rows scaled by |H| to weight the peak region by relative error.
        const double wt = p.magnitude;
        s00 += wt * wt;
        s01 += -wt * wt * w2;
        s11 += wt * wt * w2 * w2;
        r0 += wt * wt * inv.real();
        r1 += -wt * wt * w2 * inv.real();
        sim += wt * wt * p.frequency * inv.imag();
        sww += wt * wt * w2;
    }
    const double det = s00 * s11 - s01 * s01;
    const double k = (r0 * s11 - s01 * r1) / det;
    const double m = (s00 * r1 - s01 * r0) / det;
    const double c = sim / sww;
    if (!(k > 0.0) || !(m > 0.0))
        throw NumericalError(NumericalFailure::PoorFit, "complex resonance fit has no positive stiffness/mass");
    return make_resonance(std::sqrt(k / m), c / m);
}

} // namespace detail

/// Resonance from a sweep: peak by parabolic interpolation in log-log,
/// damping from the half-power width, falling back to a complex
/// rational fit when the resonance is too broad (gamma >~ omega/2) for the
/// half-power points to be meaningful. The sign of gamma comes from the phase
/// slope: a phase that rises through the peak means anti-damping.
inline ResonanceEstimate extract_resonance(const BodeData& data) {
    const auto& pts = data.points;
    if (pts.size() < 3) throw NumericalError(NumericalFailure::NoPeak, "sweep has fewer than 3 points");
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].frequency > pts[i - 1].frequency))
            throw ValidationError("sweep frequencies must be strictly increasing");

    std::size_t ip = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].magnitude > pts[ip].magnitude) ip = i;
    if (ip == 0 || ip + 1 == pts.size())
        throw NumericalError(NumericalFailure::NoPeak, "magnitude maximum is at the sweep edge");

    // Parabola through three log-log points.
    const double x0 = std::log(pts[ip - 1].frequency), x1 = std::log(pts[ip].frequency),
                 x2 = std::log(pts[ip + 1].frequency);
    const double y0 = std::log(pts[ip - 1].magnitude), y1 = std::log(pts[ip].magnitude),
                 y2 = std::log(pts[ip + 1].magnitude);
    const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    const double curv = (d12 - d01) / (x2 - x0);
    double xpk = x1;
    double ypk = y1;
    if (curv < 0.0) {
        xpk = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
        xpk = std::clamp(xpk, x0, x2);
        ypk = y1 + d01 * (xpk - x1) + curv * (xpk - x0) * (xpk - x1);
    }
    const double omega_peak = std::exp(xpk);
    const double half_power_mag = std::exp(ypk) / std::sqrt(2.0);

    // Phase slope around the peak decides the sign of the damping.
    const double phase_slope = pts[ip + 1].phase_unwrapped - pts[ip - 1].phase_unwrapped;
    const double sign = phase_slope > 0.0 ? -1.0 : 1.0;

    auto crossing = [&](std::size_t a, std::size_t b) {
        // log-linear interpolation of the frequency where |H| crosses the half-power level
        const double la = std::log(pts[a].magnitude), lb = std::log(pts[b].magnitude);
        const double t = (std::log(half_power_mag) - la) / (lb - la);
        return std::exp(std::log(pts[a].frequency) +
                        t * (std::log(pts[b].frequency) - std::log(pts[a].frequency)));
    };
    std::optional<double> w_lo, w_hi;
    std::size_t i_lo = ip, i_hi = ip;
    while (i_lo > 0 && pts[i_lo].magnitude > half_power_mag) --i_lo;
    if (pts[i_lo].magnitude <= half_power_mag) w_lo = crossing(i_lo, i_lo + 1);
    while (i_hi + 1 < pts.size() && pts[i_hi].magnitude > half_power_mag) ++i_hi;
    if (pts[i_hi].magnitude <= half_power_mag) w_hi = crossing(i_hi - 1, i_hi);

    ResonanceEstimate out;
    const double bin = pts[ip].frequency - pts[ip - 1].frequency;
    if (w_lo && w_hi) {
        const double width = *w_hi - *w_lo;
        if (width < bin) {
            out.q_lower_bound = true;
            out.resonance = make_resonance(omega_peak, sign * bin);
            return out;
        }
        if (width < 0.5 * omega_peak) {
            out.resonance = make_resonance(omega_peak, sign * width);
            return out;
        }
    }

    // Broad resonance: fit the complex response over the region above quarter power.
    std::size_t first = ip, last = ip;
    const double quarter = std::exp(ypk) / 2.0;
    while (first > 0 && pts[first - 1].magnitude > quarter) --first;
    while (last + 1 < pts.size() && pts[last + 1].magnitude > quarter) ++last;
    if (last - first < 3) {
        first = ip > 2 ? ip - 2 : 0;
        last = std::min(pts.size() - 1, ip + 2);
    }
    out.method = ExtractionMethod::ComplexFit;
    out.resonance = detail::complex_resonance_fit(pts, first, last);
    return out;
}

/// Stiffness of a solid rod of the cavity's length and the beam spot's
/// cross-section that would match the optical spring: E = K L / A.
inline double equivalent_youngs_modulus(double k, double length, double spot_area) {
    if (!(k > 0.0) || !(length > 0.0) || !(spot_area > 0.0))
        throw ValidationError("equivalent_youngs_modulus requires k, length, spot_area > 0");
    return k * length / spot_area;
}

} // namespace optospring
