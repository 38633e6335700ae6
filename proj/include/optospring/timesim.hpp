#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "optospring/response.hpp"
#include "optospring/thermal.hpp"

namespace optospring {

struct SimConfig {
    ExperimentConfig experiment;
    SimSettings settings;
};

/// Mirror coordinate (cavity length change) and the two intracavity fields,
/// normalised so |a|^2 is circulating power in watts.
struct SimState {
    double position = 0.0; // m
    double velocity = 0.0; // m/s
    std::array<std::complex<double>, 2> fields{};
};

struct Trajectory {
    double sample_interval = 0.0; // s
    std::vector<double> time;
    std::vector<double> position;
    std::vector<double> velocity;
    std::array<std::vector<double>, 2> circulating_power;
    std::vector<double> radiation_force; // fluctuating part, dc removed [N]
    bool diverged = false;
    double divergence_time = 0.0;
    std::string divergence_reason;

    std::size_t size() const { return time.size(); }
};

/// Single-pole detuned-cavity model coupled to the mirror:
///   a_i' = (i delta_i(t) - gamma) a_i + gamma sqrt(G I0_i)
///   delta_i(t) = delta_i0 + (d delta/dL) x + delta_noise
///   M x'' = -M Om_m^2 x - M G_m x' + (2/c) sum |a_i|^2 - F_dc + F_th + F_drive
/// Linearising the field equation reproduces the closed-form K(Om) and
/// Gamma(Om) exactly. The drive gamma sqrt(G I0) equals sqrt(2 gamma)
/// sqrt(I0 c / 2L): the usual input coupling with the round-trip time
/// absorbed so |a|^2 is in watts.
///
/// Deterministic terms use classic RK4. Thermal force and common laser
/// frequency noise are white, drawn once per step and held over the step.
class Simulator {
public:
    Simulator(const ExperimentConfig& cfg, SimSettings settings, std::uint64_t run_index = 0)
        : cfg_(cfg), settings_(std::move(settings)) {
        validate(cfg_);
        derived_ = derive_cavity(cfg_.cavity);
        validate(settings_, derived_);
        mass_ = reduced_mass(cfg_.mirrors);
        const auto fields = cfg_.fields();
        for (std::size_t i = 0; i < 2; ++i) {
            detuning0_[i] = fields[i].detuning * derived_.linewidth_hwhm;
            drive_[i] = derived_.linewidth_hwhm *
                        std::sqrt(derived_.resonant_gain * fields[i].input_power);
            power_bound_[i] = 1.1 * derived_.resonant_gain * fields[i].input_power;
            static_force_ += radiation_force(intracavity_power(fields[i], derived_));
        }
        const double dt = settings_.time_step;
        force_sigma_ = settings_.thermal_noise
                           ? std::sqrt(thermal_force_psd(cfg_.bath, cfg_.mirrors, mass_) / (2.0 * dt))
                           : 0.0;
        detuning_sigma_ = constants::two_pi * settings_.frequency_noise_asd / std::sqrt(2.0 * dt);
        std::seed_seq seq{static_cast<std::uint32_t>(settings_.seed),
                          static_cast<std::uint32_t>(settings_.seed >> 32),
                          static_cast<std::uint32_t>(run_index),
                          static_cast<std::uint32_t>(run_index >> 32)};
        rng_.seed(seq);
    }

    const SimSettings& settings() const { return settings_; }
    const DerivedCavity& derived() const { return derived_; }
    double static_force() const { return static_force_; }

    SimState initial_state() const {
        SimState s;
        s.position = settings_.initial_displacement;
        s.velocity = settings_.mechanics_enabled ? settings_.initial_velocity : 0.0;
        if (!settings_.cold_start_fields || settings_.adiabatic) s.fields = slaved_fields(s.position, 0.0);
        return s;
    }

    /// Advances one time step from time t.
    SimState step(const SimState& s, double t) {
        const double dt = settings_.time_step;
        Noise noise;
        if (force_sigma_ > 0.0) noise.force = force_sigma_ * normal_(rng_);
        if (detuning_sigma_ > 0.0) noise.detuning = detuning_sigma_ * normal_(rng_);

        const Deriv k1 = derivative(s, t, noise);
        const Deriv k2 = derivative(advance(s, k1, 0.5 * dt), t + 0.5 * dt, noise);
        const Deriv k3 = derivative(advance(s, k2, 0.5 * dt), t + 0.5 * dt, noise);
        const Deriv k4 = derivative(advance(s, k3, dt), t + dt, noise);
        SimState out = s;
        out.position += dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        out.velocity += dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        if (settings_.adiabatic) {
            out.fields = slaved_fields(out.position, noise.detuning);
        } else {
            for (std::size_t i = 0; i < 2; ++i)
                out.fields[i] += dt / 6.0 * (k1.da[i] + 2.0 * k2.da[i] + 2.0 * k3.da[i] + k4.da[i]);
        }

        const double limit = 1e3 * cfg_.cavity.wavelength;
        if (!std::isfinite(out.position) || std::abs(out.position) > limit)
            throw NumericalError(NumericalFailure::Divergence,
                                 "mirror displacement exceeded 1e3 wavelengths at t = " +
                                     std::to_string(t + dt) + " s");
        for (std::size_t i = 0; i < 2; ++i)
            if (!(std::norm(out.fields[i]) <= power_bound_[i] + 1e-300))
                throw NumericalError(NumericalFailure::Divergence,
                                     "circulating power left its physical bound at t = " +
                                         std::to_string(t + dt) + " s");
        return out;
    }

    /// Fluctuating radiation force (dc balance removed) for a state.
    double radiation_force_of(const SimState& s) const {
        return radiation_force(std::norm(s.fields[0]) + std::norm(s.fields[1])) - static_force_;
    }

    Trajectory run() {
        const double dt = settings_.time_step;
        const auto steps = static_cast<std::size_t>(std::llround(settings_.duration / dt));
        const std::size_t every = settings_.downsample;
        Trajectory traj;
        traj.sample_interval = dt * static_cast<double>(every);
        const std::size_t samples = (steps + every - 1) / every;
        traj.time.reserve(samples);
        traj.position.reserve(samples);
        traj.velocity.reserve(samples);
        traj.radiation_force.reserve(samples);
        for (auto& p : traj.circulating_power) p.reserve(samples);

        SimState s = initial_state();
        for (std::size_t n = 0; n < steps; ++n) {
            const double t = static_cast<double>(n) * dt;
            if (n % every == 0) record(traj, s, t);
            try {
                s = step(s, t);
            } catch (const NumericalError& e) {
                if (e.kind() != NumericalFailure::Divergence) throw;
                traj.diverged = true;
                traj.divergence_time = t + dt;
                traj.divergence_reason = e.what();
                break;
            }
        }
        return traj;
    }

private:
    struct Noise {
        double force = 0.0;
        double detuning = 0.0;
    };
    struct Deriv {
        double dx = 0.0;
        double dv = 0.0;
        std::array<std::complex<double>, 2> da{};
    };

    std::array<std::complex<double>, 2> slaved_fields(double x, double detuning_noise) const {
        std::array<std::complex<double>, 2> a{};
        const double g = derived_.linewidth_hwhm;
        for (std::size_t i = 0; i < 2; ++i) {
            const double delta = detuning0_[i] + derived_.detuning_per_length * x + detuning_noise;
            a[i] = drive_[i] / std::complex<double>(g, -delta);
        }
        return a;
    }

    SimState advance(const SimState& s, const Deriv& d, double h) const {
        SimState out = s;
        out.position += h * d.dx;
        out.velocity += h * d.dv;
        if (!settings_.adiabatic)
            for (std::size_t i = 0; i < 2; ++i) out.fields[i] += h * d.da[i];
        return out;
    }

    Deriv derivative(const SimState& s, double t, const Noise& noise) const {
        Deriv d;
        const double g = derived_.linewidth_hwhm;
        std::array<std::complex<double>, 2> a = s.fields;
        if (settings_.adiabatic) {
            a = slaved_fields(s.position, noise.detuning);
        } else {
            for (std::size_t i = 0; i < 2; ++i) {
                const double delta =
                    detuning0_[i] + derived_.detuning_per_length * s.position + noise.detuning;
                d.da[i] = std::complex<double>(-g, delta) * a[i] + drive_[i];
            }
        }
        if (!settings_.mechanics_enabled) return d;

        double force = radiation_force(std::norm(a[0]) + std::norm(a[1])) - static_force_;
        force += noise.force;
        if (settings_.external_drive)
            force += settings_.external_drive->amplitude *
                     std::sin(constants::two_pi * settings_.external_drive->frequency * t);
        const double wm = cfg_.mirrors.natural_frequency;
        d.dx = s.velocity;
        d.dv = -wm * wm * s.position - cfg_.mirrors.mechanical_damping * s.velocity + force / mass_;
        return d;
    }

    void record(Trajectory& traj, const SimState& s, double t) const {
        traj.time.push_back(t);
        traj.position.push_back(s.position);
        traj.velocity.push_back(s.velocity);
        traj.circulating_power[0].push_back(std::norm(s.fields[0]));
        traj.circulating_power[1].push_back(std::norm(s.fields[1]));
        traj.radiation_force.push_back(radiation_force_of(s));
    }

    ExperimentConfig cfg_;
    SimSettings settings_;
    DerivedCavity derived_;
    double mass_ = 0.0;
    std::array<double, 2> detuning0_{};
    std::array<double, 2> drive_{};
    std::array<double, 2> power_bound_{};
    double static_force_ = 0.0;
    double force_sigma_ = 0.0;
    double detuning_sigma_ = 0.0;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
};

inline Trajectory simulate(const SimConfig& config, std::uint64_t run_index = 0) {
    Simulator sim(config.experiment, config.settings, run_index);
    return sim.run();
}

struct GrowthFit {
    double rate = 0.0;       // 1/s, positive = growth
    double rate_stderr = 0.0; // corrected for serial correlation of the peaks
    double r_squared = 0.0;
    std::size_t peaks = 0;
};

/// Exponential envelope rate from the log of successive positive peaks
/// (parabolically refined). A flat envelope is accepted even with a low R^2
/// as long as the slope is consistent with zero; otherwise R^2 < 0.9 is a
/// poor fit.
inline GrowthFit estimate_growth_rate(std::span<const double> signal, double sample_interval) {
    std::vector<double> tp, lp;
    for (std::size_t i = 1; i + 1 < signal.size(); ++i) {
        const double a = signal[i - 1], b = signal[i], c = signal[i + 1];
        if (!(b > 0.0 && b > a && b >= c)) continue;
        const double denom = a - 2.0 * b + c;
        double off = 0.0, peak = b;
        if (denom < 0.0) {
            off = 0.5 * (a - c) / denom;
            peak = b - 0.25 * (a - c) * off;
        }
        tp.push_back((static_cast<double>(i) + off) * sample_interval);
        lp.push_back(std::log(peak));
    }
    const std::size_t n = tp.size();
    if (n < 10)
        throw NumericalError(NumericalFailure::InsufficientData,
                             "growth-rate fit needs at least 10 oscillation cycles");

    double mt = 0, ml = 0;
    for (std::size_t i = 0; i < n; ++i) { mt += tp[i]; ml += lp[i]; }
    mt /= static_cast<double>(n);
    ml /= static_cast<double>(n);
    double stt = 0, stl = 0, sll = 0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (tp[i] - mt) * (tp[i] - mt);
        stl += (tp[i] - mt) * (lp[i] - ml);
        sll += (lp[i] - ml) * (lp[i] - ml);
    }
    GrowthFit fit;
    fit.peaks = n;
    fit.rate = stl / stt;
    std::vector<double> res(n);
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        res[i] = lp[i] - (ml + fit.rate * (tp[i] - mt));
        sse += res[i] * res[i];
    }
    fit.r_squared = sll > 0.0 ? 1.0 - sse / sll : 1.0;
    double lag1 = 0;
    for (std::size_t i = 1; i < n; ++i) lag1 += res[i] * res[i - 1];
    const double rho = sse > 0.0 ? std::clamp(lag1 / sse, 0.0, 0.99) : 0.0;
    const double n_eff = std::max(3.0, static_cast<double>(n) * (1.0 - rho) / (1.0 + rho));
    fit.rate_stderr = std::sqrt(sse / (n_eff - 2.0) / stt * (static_cast<double>(n) / n_eff));
    if (fit.r_squared < 0.9 && std::abs(fit.rate) > 3.0 * fit.rate_stderr)
        throw NumericalError(NumericalFailure::PoorFit,
                             "envelope is not exponential (R^2 = " + std::to_string(fit.r_squared) + ")");
    return fit;
}

inline GrowthFit estimate_growth_rate(const Trajectory& traj) {
    return estimate_growth_rate(traj.position, traj.sample_interval);
}

struct TransferOptions {
    double drive_amplitude = 1e-10; // N
    double settle_decay_times = 10.0;
    double measure_cycles = 50.0;
    double linearity_tolerance = 1e-3;
    double convergence_tolerance = 1e-3;
};

namespace detail {

// Fits x = A sin(w t) + B cos(w t) + C by least squares.
class SineFit {
public:
    explicit SineFit(double omega) : omega_(omega) {}

    void add(double t, double x) {
        const double b[3] = {std::sin(omega_ * t), std::cos(omega_ * t), 1.0};
        for (int i = 0; i < 3; ++i) {
            rhs_[i] += b[i] * x;
            for (int j = 0; j < 3; ++j) m_[i][j] += b[i] * b[j];
        }
    }

    // Complex amplitude A + iB: the phasor of x relative to sin(w t).
    std::complex<double> phasor() const {
        const auto det3 = [](const double a[3][3]) {
            return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                   a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                   a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        };
        const double d = det3(m_);
        double sol[3];
        for (int k = 0; k < 3; ++k) {
            double a[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) a[i][j] = j == k ? rhs_[i] : m_[i][j];
            sol[k] = det3(a) / d;
        }
        return {sol[0], sol[1]};
    }

private:
    double omega_;
    double m_[3][3] = {};
    double rhs_[3] = {};
};

inline std::complex<double> driven_response(const ExperimentConfig& cfg, double f_hz,
                                            double amplitude, double settle_time, double window,
                                            double tolerance) {
    SimSettings s;
    s.initial_displacement = 0.0;
    s.external_drive = ExternalDrive{amplitude, f_hz};
    s.duration = settle_time + window;
    Simulator sim(cfg, s);
    const double dt = s.time_step;
    const double w = constants::two_pi * f_hz;
    SineFit first(w), second(w);
    SimState state = sim.initial_state();
    const auto steps = static_cast<std::size_t>(std::ceil((settle_time + window) / dt));
    const double mid = settle_time + 0.5 * window;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        state = sim.step(state, t);
        const double tn = t + dt;
        if (tn < settle_time) continue;
        (tn < mid ? first : second).add(tn, state.position);
    }
    const auto h1 = first.phasor() / amplitude;
    const auto h2 = second.phasor() / amplitude;
    if (std::abs(h1 - h2) > tolerance * std::abs(h2))
        throw NumericalError(NumericalFailure::NonConvergence,
                             "steady state not reached at " + std::to_string(f_hz) + " Hz");
    return 0.5 * (h1 + h2);
}

} // namespace detail

/// Time-domain transfer function: drive F0 sin(Om t), wait out the transient
/// (settle_decay_times amplitude decay times), then demodulate. Every point is
/// repeated at F0/2 and must agree to linearity_tolerance.
inline BodeData numeric_transfer_function(const ExperimentConfig& cfg,
                                          std::span<const double> frequencies_hz,
                                          const TransferOptions& opts = {}) {
    const auto check = eigen_check(cfg);
    if (!check.stable)
        throw ValidationError("numeric transfer function requires a stable configuration");
    const double decay_time = 2.0 / check.resonance.gamma_eff;
    const double gamma = derive_cavity(cfg.cavity).linewidth_hwhm;
    ExperimentConfig quiet = cfg;
    quiet.sim = SimSettings{};

    BodeData out;
    out.fingerprint = fingerprint(cfg);
    double prev_f = 0.0;
    for (double f : frequencies_hz) {
        if (!(f > prev_f)) throw ValidationError("frequencies must be positive and increasing");
        prev_f = f;
        const double settle = opts.settle_decay_times * decay_time + 20.0 / gamma;
        const double window = opts.measure_cycles / f;
        const auto h_full = detail::driven_response(quiet, f, opts.drive_amplitude, settle, window,
                                                    opts.convergence_tolerance);
        const auto h_half = detail::driven_response(quiet, f, 0.5 * opts.drive_amplitude, settle,
                                                    window, opts.convergence_tolerance);
        if (std::abs(h_full - h_half) > opts.linearity_tolerance * std::abs(h_full))
            throw NumericalError(NumericalFailure::NonConvergence,
                                 "response is not linear in drive amplitude at " +
                                     std::to_string(f) + " Hz");
        out.points.push_back(make_transfer_point(constants::two_pi * f, h_full));
    }
    unwrap_phase(out.points);
    return out;
}

struct SpectrumResult {
    SpectrumSeries series;
    double variance = 0.0;          // of the mean-removed input
    double integrated_power = 0.0;  // sum of PSD * df
    double parseval_ratio = 0.0;    // integrated_power / variance
    double resolution_bandwidth = 0.0;
};

enum class Detrend {
    GlobalMean, // subtract the record mean once; keeps Parseval exact
    Linear,     // least-squares line per segment, for drifting records
};

/// Welch periodogram (Hann window, 50% overlap) normalised to a single-sided
/// ASD whose squared integral is the variance.
inline SpectrumResult welch_asd(std::span<const double> signal, double sample_rate,
                                double resolution_bandwidth, Detrend detrend = Detrend::GlobalMean) {
    if (!(sample_rate > 0.0) || !(resolution_bandwidth > 0.0))
        throw ValidationError("sample rate and resolution bandwidth must be > 0");
    const double duration = static_cast<double>(signal.size()) / sample_rate;
    if (duration < 100.0 / resolution_bandwidth)
        throw NumericalError(NumericalFailure::InsufficientData,
                             "record shorter than 100 / resolution bandwidth");
    const auto seg = std::bit_ceil(static_cast<std::size_t>(std::ceil(sample_rate / resolution_bandwidth)));
    const std::size_t hop = seg / 2;
    const std::size_t bins = seg / 2 + 1;

    std::vector<double> window(seg);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(constants::two_pi * static_cast<double>(i) / static_cast<double>(seg));
        wsum2 += window[i] * window[i];
    }

    using Real = std::unique_ptr<double[], decltype(&fftw_free)>;
    using Cplx = std::unique_ptr<fftw_complex[], decltype(&fftw_free)>;
    Real in(static_cast<double*>(fftw_malloc(sizeof(double) * seg)), &fftw_free);
    Cplx out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)), &fftw_free);
    std::unique_ptr<fftw_plan_s, decltype(&fftw_destroy_plan)> plan(
        fftw_plan_dft_r2c_1d(static_cast<int>(seg), in.get(), out.get(), FFTW_ESTIMATE),
        &fftw_destroy_plan);

    std::vector<double> psd(bins, 0.0);
    std::size_t segments = 0;
    double record_mean = 0.0;
    for (double v : signal) record_mean += v;
    record_mean /= static_cast<double>(signal.size());

    // centred abscissa for the per-segment line fit
    const double mid = 0.5 * static_cast<double>(seg - 1);
    double sxx = 0.0;
    for (std::size_t i = 0; i < seg; ++i) sxx += (static_cast<double>(i) - mid) * (static_cast<double>(i) - mid);

    for (std::size_t start = 0; start + seg <= signal.size(); start += hop) {
        double offset = record_mean, slope = 0.0;
        if (detrend == Detrend::Linear) {
            double sy = 0.0, sxy = 0.0;
            for (std::size_t i = 0; i < seg; ++i) {
                sy += signal[start + i];
                sxy += (static_cast<double>(i) - mid) * signal[start + i];
            }
            offset = sy / static_cast<double>(seg);
            slope = sxy / sxx;
        }
        for (std::size_t i = 0; i < seg; ++i)
            in[i] = (signal[start + i] - offset - slope * (static_cast<double>(i) - mid)) * window[i];
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < bins; ++k)
            psd[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        ++segments;
    }

    SpectrumResult res;
    const double df = sample_rate / static_cast<double>(seg);
    res.resolution_bandwidth = df;
    res.series.frequency_hz.resize(bins);
    res.series.asd.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double one_sided = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
        const double p = one_sided * psd[k] / (static_cast<double>(segments) * sample_rate * wsum2);
        res.series.frequency_hz[k] = static_cast<double>(k) * df;
        res.series.asd[k] = std::sqrt(p);
        res.integrated_power += p * df;
    }
    for (double v : signal) res.variance += (v - record_mean) * (v - record_mean);
    res.variance /= static_cast<double>(signal.size());
    res.parseval_ratio = res.variance > 0.0 ? res.integrated_power / res.variance : 0.0;
    return res;
}

inline SpectrumResult synth_spectrum(const Trajectory& traj, double resolution_bandwidth) {
    return welch_asd(traj.position, 1.0 / traj.sample_interval, resolution_bandwidth);
}

} // namespace optospring
