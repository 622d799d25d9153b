#pragma once

// Quasi-energy ladder of a two-level spin under longitudinal periodic drive,
// the Bessel-amplitude structure of its dressed states, and the predicted
// sideband comb. fm_oracle provides a brute-force FFT check of the comb via
// the equivalent phase-modulated carrier.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "spinmaser/bessel.hpp"
#include "spinmaser/constants.hpp"
#include "spinmaser/spectral.hpp"
#include "spinmaser/timeseries.hpp"

namespace spinmaser {

struct FloquetLevel {
    int epsilon = +1; // spin branch, +1 or -1
    int n = 0;        // photon index
    double energy_hz = 0.0;
};

/// Quasi-energy E/2pi = epsilon*nu0/2 + n*nu_ac.
inline double floquet_energy(int epsilon, int n, double nu0, double nu_ac) {
    if (epsilon != 1 && epsilon != -1)
        throw std::domain_error("floquet_energy: epsilon must be +1 or -1");
    return 0.5 * static_cast<double>(epsilon) * nu0 + static_cast<double>(n) * nu_ac;
}

inline FloquetLevel make_level(int epsilon, int n, double nu0, double nu_ac) {
    return {epsilon, n, floquet_energy(epsilon, n, nu0, nu_ac)};
}

/// Frequency of the (+,n) -> (-,m) transition: (n-m)*nu_ac + nu0.
inline double transition_frequency(int n, int m, double nu0, double nu_ac) {
    return floquet_energy(+1, n, nu0, nu_ac) - floquet_energy(-1, m, nu0, nu_ac);
}

/// Dressed-state expansion coefficient J_{n-n'}(epsilon*gamma*B_ac/(2*nu_ac)).
inline double floquet_amplitude(int n_minus_nprime, int epsilon, double b_ac, double nu_ac,
                                const PhysicalConstants& c = {}) {
    if (!(nu_ac > 0.0)) throw std::domain_error("floquet_amplitude: nu_ac must be > 0");
    if (epsilon != 1 && epsilon != -1)
        throw std::domain_error("floquet_amplitude: epsilon must be +1 or -1");
    const double arg = static_cast<double>(epsilon) * c.gamma_xe * b_ac / (2.0 * nu_ac);
    return bessel_j(n_minus_nprime, arg);
}

struct SidebandLine {
    int k = 0;
    double freq_hz = 0.0;
    double relative_amplitude = 0.0; // |J_k(m)|
};

struct SidebandModel {
    std::vector<SidebandLine> lines; // k = -k_max .. k_max
    double mod_index = 0.0;
    double carrier_hz = 0.0;

    const SidebandLine& line(int k) const {
        const int k_max = (static_cast<int>(lines.size()) - 1) / 2;
        if (k < -k_max || k > k_max) throw std::out_of_range("SidebandModel: order out of range");
        return lines[static_cast<std::size_t>(k + k_max)];
    }

    /// Number of lines with amplitude above threshold * tallest line.
    int count_above(double threshold) const {
        double top = 0.0;
        for (const auto& l : lines) top = std::max(top, l.relative_amplitude);
        int n = 0;
        for (const auto& l : lines)
            if (l.relative_amplitude > threshold * top) ++n;
        return n;
    }
};

/// Predicted comb: lines at carrier + k*nu_ac with relative amplitudes
/// |J_k(m)|, m the modulation index. Throws a truncation error when k_max is
/// too small to capture the comb (1 - sum J_k^2 > 1e-9).
inline SidebandModel sideband_spectrum(double nu0, double nu_ac, double b_ac, int k_max,
                                       const PhysicalConstants& c = {}) {
    if (!(nu_ac > 0.0)) throw std::domain_error("sideband_spectrum: nu_ac must be > 0");
    if (k_max < 0) throw std::domain_error("sideband_spectrum: k_max must be >= 0");
    const double m = modulation_index(b_ac, nu_ac, c);
    const auto j = bessel_jn_array(k_max, m);

    double sum = j[0] * j[0];
    for (int k = 1; k <= k_max; ++k) sum += 2.0 * j[static_cast<std::size_t>(k)] * j[static_cast<std::size_t>(k)];
    if (1.0 - sum > 1e-9)
        throw std::runtime_error("sideband_spectrum: k_max too small, comb truncated (sum J^2 = " +
                                 std::to_string(sum) + ")");

    SidebandModel model;
    model.mod_index = m;
    model.carrier_hz = nu0;
    model.lines.reserve(static_cast<std::size_t>(2 * k_max + 1));
    for (int k = -k_max; k <= k_max; ++k)
        model.lines.push_back(
            {k, nu0 + static_cast<double>(k) * nu_ac, std::abs(j[static_cast<std::size_t>(std::abs(k))])});
    return model;
}

inline nlohmann::json sideband_model_json(const SidebandModel& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : m.lines)
        arr.push_back({{"k", l.k}, {"freq_hz", l.freq_hz}, {"amplitude", l.relative_amplitude}});
    return arr;
}

/// Independent time-domain check of the comb: synthesizes the equivalent
/// phase-modulated carrier cos(2*pi*nu0*t + m*sin(2*pi*nu_ac*t)), Fourier
/// transforms it, and returns the measured amplitude spectrum. Line heights
/// must reproduce |J_k(m)|. Choose duration*nu0 and duration*nu_ac integer to
/// land every line on a bin center.
inline Spectrum fm_oracle(double nu0, double nu_ac, double b_ac, double duration,
                          double sample_rate, const PhysicalConstants& c = {}) {
    if (!(nu_ac > 0.0)) throw std::domain_error("fm_oracle: nu_ac must be > 0");
    const double m = modulation_index(b_ac, nu_ac, c);
    const int k_max = static_cast<int>(std::ceil(m)) + 40;
    const double f_top = nu0 + static_cast<double>(k_max) * nu_ac;
    if (!(sample_rate > 4.0 * f_top))
        throw std::invalid_argument("fm_oracle: sample_rate must exceed 4*(nu0 + k_max*nu_ac) = " +
                                    std::to_string(4.0 * f_top));

    TimeSeries ts;
    ts.t0 = 0.0;
    ts.dt = 1.0 / sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    ts.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = ts.time_at(i);
        ts.values[i] = std::cos(two_pi * nu0 * t + m * std::sin(two_pi * nu_ac * t));
    }
    return amplitude_spectrum(ts, WindowKind::Rectangular);
}

/// Reads the measured amplitude at carrier + k*nu_ac off an fm_oracle
/// spectrum (nearest bin).
inline double measured_line_amplitude(const Spectrum& s, double carrier_hz, double nu_ac, int k) {
    const double f = carrier_hz + static_cast<double>(k) * nu_ac;
    const auto bin = static_cast<std::size_t>(std::llround(f / s.resolution_hz));
    if (bin >= s.size()) throw std::out_of_range("measured_line_amplitude: frequency beyond Nyquist");
    return s.values[bin];
}

} // namespace spinmaser
