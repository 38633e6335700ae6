#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "optospring/experiment.hpp"

namespace optospring {

/// Sign taxonomy of the total optical (K, Gamma). `Degenerate` marks the
/// measure-zero boundaries where either coefficient is exactly zero.
enum class RegionLabel { Stable, AntiStable, StaticallyUnstable, DynamicallyUnstable, Degenerate };

inline const char* to_string(RegionLabel label) {
    switch (label) {
    case RegionLabel::Stable: return "stable";
    case RegionLabel::AntiStable: return "anti-stable";
    case RegionLabel::StaticallyUnstable: return "statically-unstable";
    case RegionLabel::DynamicallyUnstable: return "dynamically-unstable";
    case RegionLabel::Degenerate: return "degenerate";
    }
    return "unknown";
}

inline RegionLabel classify(double k, double gamma) {
    if (k == 0.0 || gamma == 0.0) return RegionLabel::Degenerate;
    if (k > 0.0) return gamma < 0.0 ? RegionLabel::Stable : RegionLabel::DynamicallyUnstable;
    return gamma > 0.0 ? RegionLabel::AntiStable : RegionLabel::StaticallyUnstable;
}

struct StabilityCell {
    double carrier_detuning = 0.0;    // delta_C / gamma
    double subcarrier_detuning = 0.0; // delta_SC / gamma
    double stiffness = 0.0;           // N/m
    double damping = 0.0;             // 1/s
    RegionLabel label = RegionLabel::Degenerate;
    bool cold_damping = false;        // delta_SC == 0 and delta_C < 0
};

struct StabilityMap {
    std::vector<double> carrier_axis;
    std::vector<double> subcarrier_axis;
    std::vector<StabilityCell> cells; // row-major: carrier index outer
    double observation_frequency = 0.0; // rad/s
    double power_ratio = 0.0;           // carrier / subcarrier input power

    const StabilityCell& at(std::size_t ic, std::size_t isc) const {
        return cells[ic * subcarrier_axis.size() + isc];
    }

    std::pair<std::size_t, std::size_t> nearest(double carrier_detuning,
                                                double subcarrier_detuning) const {
        auto closest = [](const std::vector<double>& axis, double v) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < axis.size(); ++i)
                if (std::abs(axis[i] - v) < std::abs(axis[best] - v)) best = i;
            return best;
        };
        return {closest(carrier_axis, carrier_detuning), closest(subcarrier_axis, subcarrier_detuning)};
    }
};

struct DetuningRange {
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

} // namespace detail

/// Samples the total optical (K, Gamma) over a grid of carrier/subcarrier
/// detunings at fixed input powers. The subcarrier axis always contains an
/// exact zero when the range straddles it, so the cold-damping locus is a
/// column of the map.
inline StabilityMap map_detuning_plane(const ExperimentConfig& cfg, DetuningRange carrier_range,
                                       DetuningRange subcarrier_range, std::size_t carrier_points,
                                       std::size_t subcarrier_points, double omega_obs) {
    if (!(carrier_range.hi > carrier_range.lo) || !(subcarrier_range.hi > subcarrier_range.lo))
        throw ValidationError("detuning ranges must be non-empty (lo < hi)");
    if (carrier_points < 2 || subcarrier_points < 2)
        throw ValidationError("grid must have at least 2 points per axis");
    if (!(omega_obs >= 0.0)) throw ValidationError("observation frequency must be >= 0");

    StabilityMap map;
    map.carrier_axis = detail::linspace(carrier_range.lo, carrier_range.hi, carrier_points);
    map.subcarrier_axis =
        detail::linspace(subcarrier_range.lo, subcarrier_range.hi, subcarrier_points);
    if (subcarrier_range.lo < 0.0 && subcarrier_range.hi > 0.0) {
        auto& ax = map.subcarrier_axis;
        const auto it = std::min_element(ax.begin(), ax.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        });
        const double step = (subcarrier_range.hi - subcarrier_range.lo) /
                            static_cast<double>(subcarrier_points - 1);
        if (std::abs(*it) < 1e-9 * step)
            *it = 0.0;
        else
            ax.insert(std::upper_bound(ax.begin(), ax.end(), 0.0), 0.0);
    }
    map.observation_frequency = omega_obs;
    map.power_ratio = cfg.subcarrier.input_power > 0.0
                          ? cfg.carrier.input_power / cfg.subcarrier.input_power
                          : std::numeric_limits<double>::infinity();

    map.cells.reserve(map.carrier_axis.size() * map.subcarrier_axis.size());
    auto inputs = field_inputs(cfg);
    for (double dc : map.carrier_axis) {
        inputs[0].field.detuning = dc;
        for (double dsc : map.subcarrier_axis) {
            inputs[1].field.detuning = dsc;
            const auto total = combine(inputs, omega_obs);
            map.cells.push_back({dc, dsc, total.stiffness, total.damping,
                                 classify(total.stiffness, total.damping),
                                 dsc == 0.0 && dc < 0.0});
        }
    }
    return map;
}

/// Cells 4-connected to (ic, isc) that share its label. Empty when the seed
/// cell is not Stable.
inline std::vector<std::size_t> stable_region_containing(const StabilityMap& map, std::size_t ic,
                                                         std::size_t isc) {
    const std::size_t nc = map.carrier_axis.size();
    const std::size_t nsc = map.subcarrier_axis.size();
    std::vector<std::size_t> region;
    if (map.at(ic, isc).label != RegionLabel::Stable) return region;
    std::vector<char> seen(nc * nsc, 0);
    std::queue<std::size_t> todo;
    todo.push(ic * nsc + isc);
    seen[ic * nsc + isc] = 1;
    while (!todo.empty()) {
        const std::size_t idx = todo.front();
        todo.pop();
        region.push_back(idx);
        const std::size_t i = idx / nsc, j = idx % nsc;
        const std::array<std::pair<long, long>, 4> steps{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
        for (auto [di, dj] : steps) {
            const long ni = static_cast<long>(i) + di, nj = static_cast<long>(j) + dj;
            if (ni < 0 || nj < 0 || ni >= static_cast<long>(nc) || nj >= static_cast<long>(nsc))
                continue;
            const std::size_t n = static_cast<std::size_t>(ni) * nsc + static_cast<std::size_t>(nj);
            if (!seen[n] && map.cells[n].label == RegionLabel::Stable) {
                seen[n] = 1;
                todo.push(n);
            }
        }
    }
    std::sort(region.begin(), region.end());
    return region;
}

struct EffectiveResonance {
    double omega_eff = 0.0; // rad/s
    double gamma_eff = 0.0; // net energy decay rate [1/s]; negative = growth
    double q_eff = 0.0;     // omega_eff / gamma_eff (negative when anti-damped)
};

struct ResonanceSolution {
    EffectiveResonance resonance;   // lowest root
    std::vector<double> all_roots;  // every sign change found in the bracket [rad/s]
    double residual = 0.0;          // |Om^2 - Om_m^2 - K_tot(Om)/M| at the reported root
};

inline EffectiveResonance make_resonance(double omega, double gamma) {
    return {omega, gamma, omega / gamma};
}

/// Solves Om^2 = Om_m^2 + K_tot(Om)/M on [Om_m, 10 gamma]: log-spaced scan,
/// bisection on each sign change, then a guarded secant polish.
inline ResonanceSolution find_omega_eff(const ExperimentConfig& cfg) {
    const auto inputs = field_inputs(cfg);
    const double mass = inputs[0].reduced_mass;
    const double wm = cfg.mirrors.natural_frequency;
    const double gamma = inputs[0].derived.linewidth_hwhm;
    auto residual = [&](double w) {
        return wm * wm + combine(inputs, w).stiffness / mass - w * w;
    };

    constexpr int scan_points = 4000;
    const double lo = wm, hi = 10.0 * gamma;
    std::vector<double> roots;
    double w_prev = lo, f_prev = residual(lo);
    if (f_prev == 0.0) roots.push_back(lo);
    for (int i = 1; i <= scan_points; ++i) {
        const double w = lo * std::pow(hi / lo, static_cast<double>(i) / scan_points);
        const double f = residual(w);
        if (f == 0.0) {
            roots.push_back(w);
        } else if (f_prev != 0.0 && (f_prev < 0.0) != (f < 0.0)) {
            double a = w_prev, b = w, fa = f_prev;
            for (int it = 0; it < 200 && b - a > 1e-13 * b; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = residual(m);
                if (fm == 0.0) { a = b = m; break; }
                if ((fm < 0.0) == (fa < 0.0)) { a = m; fa = fm; } else { b = m; }
            }
            // Secant polish, kept only if it stays inside the bracket and improves.
            double x0 = a, x1 = b, f0 = residual(a), f1 = residual(b);
            double best = std::abs(f0) < std::abs(f1) ? x0 : x1;
            for (int it = 0; it < 8 && f1 != f0; ++it) {
                const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                if (!(x2 >= w_prev && x2 <= w)) break;
                x0 = x1; f0 = f1; x1 = x2; f1 = residual(x2);
                if (std::abs(f1) < std::abs(residual(best))) best = x1;
                if (f1 == 0.0) break;
            }
            roots.push_back(best);
        }
        w_prev = w;
        f_prev = f;
    }
    if (roots.empty())
        throw NumericalError(NumericalFailure::NoCrossing,
                             "Om^2 - Om_m^2 - K_tot(Om)/M has no sign change in [Om_m, 10 gamma]");

    ResonanceSolution out;
    out.all_roots = roots;
    const double w = roots.front();
    out.residual = std::abs(residual(w));
    out.resonance =
        make_resonance(w, cfg.mirrors.mechanical_damping - combine(inputs, w).damping);
    return out;
}

struct EigenCheck {
    bool stable = false;
    std::array<std::complex<double>, 2> roots; // [1/s]
    EffectiveResonance resonance;
};

/// Roots of s^2 + (G_m - Gamma_tot) s + Om_m^2 + K_tot/M with the optical
/// coefficients frozen at Om_eff.
inline EigenCheck eigen_check(const ExperimentConfig& cfg) {
    const auto sol = find_omega_eff(cfg);
    const double w = sol.resonance.omega_eff;
    const auto total = total_coefficients(cfg, w);
    const double mass = reduced_mass(cfg.mirrors);
    const double b = cfg.mirrors.mechanical_damping - total.damping;
    const double c = cfg.mirrors.natural_frequency * cfg.mirrors.natural_frequency +
                     total.stiffness / mass;
    const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4.0 * c, 0.0));
    EigenCheck out;
    // Numerically stable quadratic: q = -(b + sign(b) sqrt(disc)) / 2.
    const std::complex<double> q = -0.5 * (b + (b >= 0.0 ? disc : -disc));
    if (q == std::complex<double>(0.0, 0.0)) {
        out.roots = {std::complex<double>(0.0), std::complex<double>(0.0)};
    } else {
        out.roots = {q, c / q};
    }
    if (out.roots[0].imag() < out.roots[1].imag()) std::swap(out.roots[0], out.roots[1]);
    out.stable = out.roots[0].real() < 0.0 && out.roots[1].real() < 0.0;
    out.resonance = sol.resonance;
    return out;
}

/// Carrier input power (subcarrier scaled to keep the configured ratio)
/// that places Om_eff at `target_omega`. Bisection over [lo, hi] watts.
inline double fit_carrier_power(ExperimentConfig cfg, double target_omega, double lo, double hi) {
    const double ratio =
        cfg.carrier.input_power > 0.0 ? cfg.subcarrier.input_power / cfg.carrier.input_power : 0.0;
    auto omega_at = [&](double p) {
        cfg.carrier.input_power = p;
        cfg.subcarrier.input_power = ratio * p;
        return find_omega_eff(cfg).resonance.omega_eff - target_omega;
    };
    double flo = omega_at(lo), fhi = omega_at(hi);
    if ((flo < 0.0) == (fhi < 0.0))
        throw NumericalError(NumericalFailure::NoCrossing, "target frequency not bracketed by power range");
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double m = 0.5 * (lo + hi);
        const double fm = omega_at(m);
        if ((fm < 0.0) == (flo < 0.0)) { lo = m; flo = fm; } else { hi = m; fhi = fm; }
    }
    return 0.5 * (lo + hi);
}

} // namespace optospring
