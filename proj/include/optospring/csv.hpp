#pragma once

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "optospring/format.hpp"
#include "optospring/response.hpp"
#include "optospring/stability.hpp"
#include "optospring/thermal.hpp"
#include "optospring/timesim.hpp"

namespace optospring::csv {

inline std::string format(double v) { return format_number(v); }

inline constexpr std::string_view stability_header =
    "delta_c_over_gamma,delta_sc_over_gamma,k_total_n_per_m,gamma_total_per_s,label";
inline constexpr std::string_view bode_header =
    "frequency_hz,magnitude_m_per_n,phase_deg,phase_unwrapped_deg";
inline constexpr std::string_view trajectory_header =
    "time_s,x_m,v_m_per_s,p_circ_1_w,p_circ_2_w,f_rad_n";
inline constexpr std::string_view spectrum_header = "frequency_hz,asd_m_per_rthz";

inline void write(std::ostream& os, const StabilityMap& map) {
    os << stability_header << '\n';
    for (const auto& c : map.cells)
        os << format(c.carrier_detuning) << ',' << format(c.subcarrier_detuning) << ','
           << format(c.stiffness) << ',' << format(c.damping) << ',' << to_string(c.label) << '\n';
}

inline void write(std::ostream& os, const BodeData& data) {
    constexpr double deg = 180.0 / constants::pi;
    os << bode_header << '\n';
    for (const auto& p : data.points)
        os << format(p.frequency / constants::two_pi) << ',' << format(p.magnitude) << ','
           << format(p.phase * deg) << ',' << format(p.phase_unwrapped * deg) << '\n';
}

inline void write(std::ostream& os, const Trajectory& traj) {
    os << trajectory_header << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i)
        os << format(traj.time[i]) << ',' << format(traj.position[i]) << ','
           << format(traj.velocity[i]) << ',' << format(traj.circulating_power[0][i]) << ','
           << format(traj.circulating_power[1][i]) << ',' << format(traj.radiation_force[i]) << '\n';
}

inline void write(std::ostream& os, const SpectrumSeries& s) {
    os << spectrum_header << '\n';
    for (std::size_t i = 0; i < s.frequency_hz.size(); ++i)
        os << format(s.frequency_hz[i]) << ',' << format(s.asd[i]) << '\n';
}

template <typename T>
void write_file(const std::string& path, const T& value) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    write(out, value);
}

namespace detail {

inline double parse_number(std::string_view text, int line) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ValidationError("spectrum CSV line " + std::to_string(line) + ": invalid number '" +
                              std::string(text) + "'");
    return v;
}

} // namespace detail

/// Reads `frequency_hz,asd_m_per_rthz` rows. The header line is required.
inline SpectrumSeries read_spectrum(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("spectrum CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != spectrum_header)
        throw ValidationError("spectrum CSV header must be '" + std::string(spectrum_header) + "'");
    SpectrumSeries s;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError("spectrum CSV line " + std::to_string(n) + ": expected two columns");
        s.frequency_hz.push_back(detail::parse_number(std::string_view(line).substr(0, comma), n));
        s.asd.push_back(detail::parse_number(std::string_view(line).substr(comma + 1), n));
    }
    validate(s);
    return s;
}

inline SpectrumSeries read_spectrum_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open spectrum file " + path);
    return read_spectrum(in);
}

} // namespace optospring::csv
