#include <gtest/gtest.h>

#include "optospring/optospring.hpp"
#include "oracles.hpp"

using namespace optospring;

namespace {

BodeData oscillator_sweep(double m, double w0, double g, double f_lo, double f_hi, double ppd) {
    BodeData d;
    for (double f : log_frequencies_hz(f_lo, f_hi, ppd)) {
        const double w = constants::two_pi * f;
        d.points.push_back(make_transfer_point(w, oracle::oscillator(m, w0, g, w)));
    }
    unwrap_phase(d.points);
    return d;
}

} // namespace

TEST(Susceptibility, DcLimitWithoutOptics) {
    const auto cfg = without_optical_spring(ExperimentConfig{});
    const double m = reduced_mass(cfg.mirrors);
    const double wm = cfg.mirrors.natural_frequency;
    const auto h = susceptibility(cfg, 1e-3);
    EXPECT_NEAR(std::abs(h), 1.0 / (m * wm * wm), 1e-9 / (m * wm * wm));
}

TEST(Susceptibility, MassLineAsymptote) {
    for (char p : {'a', 'b', 'c', 'd'}) {
        const auto cfg = preset_config(p);
        const double w = 100.0 * derive_cavity(cfg.cavity).linewidth_hwhm;
        const double mass_line = 1.0 / (reduced_mass(cfg.mirrors) * w * w);
        EXPECT_NEAR(std::abs(susceptibility(cfg, w)), mass_line, 0.01 * mass_line) << p;
    }
}

TEST(Susceptibility, MatchesLinearisedFieldModel) {
    const oracle::Setup s;
    for (char p : {'a', 'b', 'c', 'd'}) {
        const auto cfg = preset_config(p);
        for (double f : {10.0, 172.0, 1000.0, 1697.0, 2178.0, 5000.0, 1e4, 3e4, 1e5}) {
            const double w = constants::two_pi * f;
            const auto ref = oracle::susceptibility(
                s, w,
                {{cfg.carrier.input_power, cfg.carrier.detuning},
                 {cfg.subcarrier.input_power, cfg.subcarrier.detuning}});
            const auto h = susceptibility(cfg, w);
            EXPECT_NEAR(std::abs(h - ref), 0.0, 1e-8 * std::abs(ref)) << p << " " << f;
        }
    }
}

TEST(BodeSweep, Structure) {
    const auto cfg = preset_config('d');
    const auto bode = bode_sweep(cfg, 10.0, 1e5, 50);
    ASSERT_EQ(bode.points.size(), 201u);
    EXPECT_EQ(bode.fingerprint, fingerprint(cfg));
    EXPECT_NEAR(bode.points.front().frequency, constants::two_pi * 10.0, 1e-9);
    EXPECT_NEAR(bode.points.back().frequency, constants::two_pi * 1e5, 1e-6);
    for (std::size_t i = 0; i < bode.points.size(); ++i) {
        const auto& pt = bode.points[i];
        EXPECT_GE(pt.magnitude, 0.0);
        EXPECT_GT(pt.phase, -constants::pi);
        EXPECT_LE(pt.phase, constants::pi);
        if (i > 0) {
            EXPECT_GT(pt.frequency, bode.points[i - 1].frequency);
            EXPECT_LT(std::abs(pt.phase_unwrapped - bode.points[i - 1].phase_unwrapped), constants::pi);
        }
    }
    EXPECT_THROW(bode_sweep(cfg, 0.0, 10.0, 10), ValidationError);
    EXPECT_THROW(bode_sweep(cfg, 10.0, 5.0, 10), ValidationError);
}

TEST(BodeSweep, PhaseDirectionThroughResonance) {
    for (char p : {'c', 'd'}) {
        const auto cfg = preset_config(p);
        const auto res = find_omega_eff(cfg).resonance;
        const double f0 = res.omega_eff / constants::two_pi;
        const double hw = std::abs(res.gamma_eff) / constants::two_pi / 2.0;
        const auto bode = bode_sweep(cfg, f0 - 3.0 * hw, f0 + 3.0 * hw, 2000);
        const bool stable = res.gamma_eff > 0.0;
        for (std::size_t i = 1; i < bode.points.size(); ++i) {
            const double d = bode.points[i].phase_unwrapped - bode.points[i - 1].phase_unwrapped;
            if (stable) {
                EXPECT_LT(d, 0.0) << p;
            } else {
                EXPECT_GT(d, 0.0) << p;
            }
        }
    }
}

TEST(ExtractResonance, AnalyticOscillatorQ10) {
    const double w0 = constants::two_pi * 1234.0;
    const double q = 10.0;
    const auto bode = oscillator_sweep(1e-3, w0, w0 / q, 100.0, 1e4, 200);
    const auto est = extract_resonance(bode);
    EXPECT_NEAR(est.resonance.omega_eff, w0, 0.005 * w0);
    EXPECT_NEAR(est.resonance.q_eff, q, 0.02 * q);
    EXPECT_FALSE(est.q_lower_bound);
}

TEST(ExtractResonance, BroadOscillatorUsesComplexFit) {
    const double w0 = constants::two_pi * 800.0;
    const auto bode = oscillator_sweep(1e-3, w0, w0 / 1.2, 10.0, 1e5, 100);
    const auto est = extract_resonance(bode);
    EXPECT_EQ(est.method, ExtractionMethod::ComplexFit);
    EXPECT_NEAR(est.resonance.omega_eff, w0, 0.01 * w0);
    EXPECT_NEAR(est.resonance.q_eff, 1.2, 0.02 * 1.2);
}

TEST(ExtractResonance, PresetDIsStableAndMatchesStabilityModule) {
    const auto cfg = preset_config('d');
    const auto est = extract_resonance(bode_sweep(cfg, 10.0, 1e5, 200));
    const auto sol = find_omega_eff(cfg);
    const double expect = cfg.mirrors.mechanical_damping -
                          total_coefficients(cfg, sol.resonance.omega_eff).damping;
    EXPECT_GT(est.resonance.gamma_eff, 0.0);
    EXPECT_NEAR(est.resonance.gamma_eff, expect, 0.1 * expect);
}

TEST(ExtractResonance, PresetCIsAntiDamped) {
    const auto est = extract_resonance(bode_sweep(preset_config('c'), 10.0, 1e5, 200));
    EXPECT_LT(est.resonance.gamma_eff, 0.0);
    EXPECT_NEAR(est.resonance.omega_eff / constants::two_pi, 2178.0, 0.02 * 2178.0);
}

TEST(ExtractResonance, WithinHalfBinOfSolvedResonance) {
    for (char p : {'d'}) {
        const auto cfg = preset_config(p);
        const auto sol = find_omega_eff(cfg);
        ASSERT_GT(sol.resonance.q_eff, 5.0);
        const auto bode = bode_sweep(cfg, 10.0, 1e5, 200);
        const auto est = extract_resonance(bode);
        const double ratio = std::pow(10.0, 1.0 / 200.0);
        const double half_bin = 0.5 * sol.resonance.omega_eff * (ratio - 1.0);
        EXPECT_NEAR(est.resonance.omega_eff, sol.resonance.omega_eff, half_bin);
    }
    // Sharper resonances: a plain oscillator swept at the same density.
    for (double q : {6.0, 30.0, 300.0}) {
        const double w0 = constants::two_pi * 1500.0;
        const auto est = extract_resonance(oscillator_sweep(1e-3, w0, w0 / q, 10.0, 1e5, 200));
        const double half_bin = 0.5 * w0 * (std::pow(10.0, 1.0 / 200.0) - 1.0);
        EXPECT_NEAR(est.resonance.omega_eff, w0 * std::sqrt(1.0 - 0.5 / (q * q)), half_bin) << q;
    }
}

TEST(ExtractResonance, UnresolvedWidthFlagsLowerBound) {
    const double w0 = constants::two_pi * 1000.0;
    const auto est = extract_resonance(oscillator_sweep(1e-3, w0, w0 / 1e7, 100.0, 1e4, 20));
    EXPECT_TRUE(est.q_lower_bound);
    EXPECT_GT(est.resonance.gamma_eff, 0.0);
}

TEST(ExtractResonance, EdgePeakIsNoPeak) {
    const auto bode = oscillator_sweep(1e-3, constants::two_pi * 10.0, 1.0, 100.0, 1e4, 20);
    try {
        extract_resonance(bode);
        FAIL();
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.kind(), NumericalFailure::NoPeak);
    }
}

TEST(YoungsModulus, Examples) {
    EXPECT_EQ(equivalent_youngs_modulus(2e6, 0.9, 1.5e-6), 1.2e12);
    EXPECT_EQ(equivalent_youngs_modulus(1.0, 1.0, 1.0), 1.0);
    EXPECT_THROW(equivalent_youngs_modulus(-1.0, 1.0, 1.0), ValidationError);
}
