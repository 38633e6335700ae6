#include <gtest/gtest.h>

#include "optospring/optospring.hpp"
#include "oracles.hpp"

using namespace optospring;

namespace {

constexpr double force_psd_frozen = 5.44296e-24;      // N^2/Hz at 293 K
constexpr double t_eff_124_frozen = 0.798002537;      // K
constexpr double occupation_frozen = 3.54949384e10;   // 293 K, 2 pi 172 Hz
constexpr double t_eff_rms_frozen = 0.807481119;      // K
constexpr double displacement_per_hz = 3.194209776e-15; // m

const MirrorMechanics mech = ExperimentConfig{}.mirrors;

SpectrumSeries sampled(double f_lo, double f_hi, std::size_t n, auto psd) {
    SpectrumSeries s;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = f_lo + (f_hi - f_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        s.frequency_hz.push_back(f);
        s.asd.push_back(std::sqrt(psd(f)));
    }
    return s;
}

} // namespace

TEST(ThermalForcePsd, Examples) {
    const double m = reduced_mass(mech);
    EXPECT_EQ(thermal_force_psd({0.0}, mech, m), 0.0);
    EXPECT_NEAR(thermal_force_psd({293.0}, mech, m), force_psd_frozen, 1e-5 * force_psd_frozen);
    EXPECT_NEAR(thermal_force_psd({293.0}, mech, m),
                4.0 * 1.380649e-23 * 293.0 * oracle::Setup{}.mass * oracle::Setup{}.omega_m / 3200.0,
                1e-12 * force_psd_frozen);
}

TEST(TEff, FromDamping) {
    EXPECT_DOUBLE_EQ(t_eff_from_damping(293.0, mech, make_resonance(1000.0, mech.mechanical_damping)), 293.0);
    const double t = t_eff_from_damping(293.0, mech, make_resonance(constants::two_pi * 1700.0, 124.0));
    EXPECT_NEAR(t, t_eff_124_frozen, 1e-8);
    EXPECT_NEAR(t, 0.8, 0.01);
    EXPECT_THROW(t_eff_from_damping(293.0, mech, make_resonance(1000.0, -3.0)), ValidationError);
}

TEST(TEff, QualityFormAgreesWithDampingForm) {
    for (double g : {0.5, 124.0, 1510.0})
        for (double f : {172.0, 1697.0, 5000.0}) {
            const auto r = make_resonance(constants::two_pi * f, g);
            EXPECT_NEAR(t_eff_from_quality(293.0, mech, r), t_eff_from_damping(293.0, mech, r),
                        1e-12 * t_eff_from_damping(293.0, mech, r));
        }
}

TEST(Occupation, Examples) {
    EXPECT_EQ(occupation(0.0, 1000.0), 0.0);
    EXPECT_NEAR(occupation(293.0, constants::two_pi * 172.0), occupation_frozen, 1e-8 * occupation_frozen);
    for (double f : {1000.0, 1500.0, 2000.0}) {
        const double reduction = occupation(293.0, constants::two_pi * 172.0) / occupation(0.8, constants::two_pi * f);
        EXPECT_GE(reduction, 2e3) << f;
        EXPECT_LE(reduction, 5e3) << f;
    }
    EXPECT_THROW(occupation(1.0, 0.0), ValidationError);
}

TEST(Occupation, Homogeneous) {
    for (double a : {1e-3, 0.5, 7.0, 1e4}) {
        const double n = occupation(3.8, 1e4);
        EXPECT_NEAR(occupation(a * 3.8, a * 1e4), n, 1e-12 * n);
    }
}

TEST(XRmsBand, FlatSpectrum) {
    const double a = 3e-15;
    const auto s = sampled(0.0, 5000.0, 501, [&](double) { return a * a; });
    EXPECT_NEAR(x_rms_band(s, 1500.0, 2300.0), a * std::sqrt(800.0), 1e-12 * a * std::sqrt(800.0));
    // band edges between samples
    EXPECT_NEAR(x_rms_band(s, 1503.3, 2291.7), a * std::sqrt(2291.7 - 1503.3), 1e-9 * a * 30.0);
}

TEST(XRmsBand, MonotoneInBandWidth) {
    const auto s = sampled(0.0, 5000.0, 1001, [](double f) { return oracle::lorentzian_psd(1e-28, 1700.0, 100.0, f); });
    double prev = 0.0;
    for (double half = 10.0; half < 1700.0; half *= 1.3) {
        const double r = x_rms_band(s, 1700.0 - half, 1700.0 + half);
        EXPECT_GE(r, prev);
        prev = r;
    }
}

TEST(XRmsBand, LorentzianAtTenPointsPerLinewidth) {
    const double f0 = 1700.0, hw = 50.0, var = 4e-29;
    const double df = 2.0 * hw / 10.0;
    const auto s = sampled(0.0, 6000.0, static_cast<std::size_t>(6000.0 / df) + 1,
                           [&](double f) { return oracle::lorentzian_psd(var, f0, hw, f); });
    const double expect = std::sqrt(oracle::lorentzian_band_variance(var, f0, hw, 1000.0, 2400.0));
    EXPECT_NEAR(x_rms_band(s, 1000.0, 2400.0), expect, 0.01 * expect);
}

TEST(XRmsBand, RejectsBadInput) {
    const auto s = sampled(0.0, 100.0, 11, [](double) { return 1.0; });
    EXPECT_THROW(x_rms_band(s, 50.0, 40.0), ValidationError);
    EXPECT_THROW(x_rms_band(s, 50.0, 400.0), ValidationError);
    SpectrumSeries bad = s;
    bad.asd[3] = -1.0;
    EXPECT_THROW(x_rms_band(bad, 10.0, 40.0), ValidationError);
}

TEST(TEffFromRms, Examples) {
    EXPECT_NEAR(t_eff_from_rms(1.58e5, 8.4e-15), t_eff_rms_frozen, 1e-8);
    EXPECT_NEAR(t_eff_from_rms(1.58e5, 8.4e-15), 0.8, 0.02);
    EXPECT_EQ(t_eff_from_rms(1.58e5, 0.0), 0.0);
}

TEST(FrequencyNoise, Examples) {
    EXPECT_NEAR(frequency_noise_to_displacement(CavityGeometry{}, 1.0), displacement_per_hz, 1e-23);
    EXPECT_NEAR(frequency_noise_to_displacement(CavityGeometry{}, 1.0), 3.19e-15, 0.01e-15);
    EXPECT_EQ(frequency_noise_to_displacement(CavityGeometry{}, 0.0), 0.0);
}
