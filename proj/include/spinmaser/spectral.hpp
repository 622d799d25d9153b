#pragma once

// Batch Fourier analysis of uniform records: one-sided amplitude spectra and
// PSDs, peak finding with parabolic refinement, FWHM measurement, and
// quadrature demodulation against a reference frequency.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinmaser/constants.hpp"
#include "spinmaser/fft.hpp"
#include "spinmaser/timeseries.hpp"

namespace spinmaser {

enum class WindowKind { Rectangular, Hann };
enum class SpectrumKind { Amplitude, Psd };

inline const char* window_name(WindowKind w) {
    return w == WindowKind::Rectangular ? "rectangular" : "hann";
}

struct Spectrum {
    std::vector<double> freqs;  // Hz, uniform 0..Nyquist
    std::vector<double> values; // amplitude (signal units) or PSD (units^2/Hz)
    SpectrumKind kind = SpectrumKind::Amplitude;
    WindowKind window = WindowKind::Rectangular;
    double resolution_hz = 0.0; // 1/duration

    std::size_t size() const { return values.size(); }
};

struct Peak {
    double freq = 0.0;      // Hz, parabolically interpolated
    double amplitude = 0.0; // spectrum units at the refined peak
    double fwhm = std::numeric_limits<double>::quiet_NaN(); // Hz, NaN = not measured
    std::optional<int> order_k; // sideband label when assigned
};

namespace detail {

inline std::vector<double> make_window(WindowKind w, std::size_t n) {
    std::vector<double> win(n, 1.0);
    if (w == WindowKind::Hann)
        for (std::size_t i = 0; i < n; ++i)
            win[i] = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
    return win;
}

inline void require_uniform(const TimeSeries& ts, std::size_t min_samples) {
    if (ts.size() < min_samples)
        throw std::invalid_argument("spectral: need at least " + std::to_string(min_samples) +
                                    " samples");
    if (!(ts.dt > 0.0)) throw std::invalid_argument("spectral: non-positive sample interval");
}

} // namespace detail

/// One-sided amplitude spectrum normalized so a unit-amplitude sinusoid at a
/// bin center reads 1.0 (corrected for the window's coherent gain).
inline Spectrum amplitude_spectrum(const TimeSeries& ts, WindowKind window = WindowKind::Rectangular) {
    detail::require_uniform(ts, 16);
    const std::size_t n = ts.size();
    const auto win = detail::make_window(window, n);
    double wsum = 0.0;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ts.values[i] * win[i];
        wsum += win[i];
    }
    const auto bins = rfft(x);

    Spectrum s;
    s.kind = SpectrumKind::Amplitude;
    s.window = window;
    s.resolution_hz = 1.0 / (ts.dt * static_cast<double>(n));
    s.freqs.resize(bins.size());
    s.values.resize(bins.size());
    for (std::size_t k = 0; k < bins.size(); ++k) {
        s.freqs[k] = static_cast<double>(k) * s.resolution_hz;
        const bool edge = (k == 0) || (n % 2 == 0 && k == bins.size() - 1);
        s.values[k] = std::abs(bins[k]) * (edge ? 1.0 : 2.0) / wsum;
    }
    return s;
}

enum class PsdMethod { Periodogram, AveragedSegments };

/// One-sided power spectral density, Parseval-consistent:
/// sum(PSD)*df ~= mean square of the record.
inline Spectrum psd(const TimeSeries& ts, PsdMethod method = PsdMethod::Periodogram,
                    std::size_t segments = 16, WindowKind window = WindowKind::Hann) {
    detail::require_uniform(ts, 16);
    const double fs = 1.0 / ts.dt;

    auto one_sided = [&](const std::vector<double>& x, WindowKind w) {
        const std::size_t n = x.size();
        const auto win = detail::make_window(w, n);
        double w2sum = 0.0;
        std::vector<double> xw(n);
        for (std::size_t i = 0; i < n; ++i) {
            xw[i] = x[i] * win[i];
            w2sum += win[i] * win[i];
        }
        const auto bins = rfft(xw);
        std::vector<double> p(bins.size());
        for (std::size_t k = 0; k < bins.size(); ++k) {
            const bool edge = (k == 0) || (n % 2 == 0 && k == bins.size() - 1);
            p[k] = std::norm(bins[k]) * (edge ? 1.0 : 2.0) / (fs * w2sum);
        }
        return p;
    };

    Spectrum s;
    s.kind = SpectrumKind::Psd;

    if (method == PsdMethod::Periodogram) {
        s.window = window;
        s.values = one_sided(ts.values, window);
        s.resolution_hz = fs / static_cast<double>(ts.size());
    } else {
        if (segments < 1) throw std::invalid_argument("psd: segments must be >= 1");
        const std::size_t seg_len = ts.size() / segments;
        if (seg_len < 16)
            throw std::invalid_argument("psd: segment length below 16 samples");
        // 50% overlap
        const std::size_t hop = seg_len / 2;
        std::size_t count = 0;
        std::vector<double> acc;
        for (std::size_t start = 0; start + seg_len <= ts.size(); start += hop) {
            std::vector<double> seg(ts.values.begin() + static_cast<std::ptrdiff_t>(start),
                                    ts.values.begin() + static_cast<std::ptrdiff_t>(start + seg_len));
            auto p = one_sided(seg, window);
            if (acc.empty()) acc.assign(p.size(), 0.0);
            for (std::size_t k = 0; k < p.size(); ++k) acc[k] += p[k];
            ++count;
        }
        for (auto& v : acc) v /= static_cast<double>(count);
        s.window = window;
        s.values = std::move(acc);
        s.resolution_hz = fs / static_cast<double>(seg_len);
    }

    s.freqs.resize(s.values.size());
    for (std::size_t k = 0; k < s.freqs.size(); ++k)
        s.freqs[k] = static_cast<double>(k) * s.resolution_hz;
    return s;
}

/// Local maxima above rel_threshold * max(values), separated by at least
/// min_separation (when two candidates fall closer, the taller one wins).
/// Frequencies are refined by 3-point parabolic interpolation on the log of
/// the spectrum.
inline std::vector<Peak> find_peaks(const Spectrum& s, double rel_threshold,
                                    double min_separation_hz) {
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
        throw std::invalid_argument("find_peaks: rel_threshold must lie in (0,1)");
    if (s.size() < 3) return {};

    const double vmax = *std::max_element(s.values.begin(), s.values.end());
    if (!(vmax > 0.0)) return {};
    const double thresh = rel_threshold * vmax;

    std::vector<Peak> raw;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double v = s.values[k];
        if (v < thresh) continue;
        if (!(v >= s.values[k - 1] && v > s.values[k + 1])) continue;

        // log-parabola refinement; guard zero neighbors
        const double eps = 1e-300;
        const double la = std::log(s.values[k - 1] + eps);
        const double lb = std::log(v + eps);
        const double lc = std::log(s.values[k + 1] + eps);
        double delta = 0.0;
        const double denom = la - 2.0 * lb + lc;
        if (denom < 0.0) delta = 0.5 * (la - lc) / denom;
        if (!(delta > -0.5 && delta < 0.5)) delta = 0.0;

        Peak p;
        p.freq = (static_cast<double>(k) + delta) * s.resolution_hz;
        p.amplitude = std::exp(lb - 0.25 * (la - lc) * delta);
        raw.push_back(p);
    }

    // enforce separation, tallest first
    std::sort(raw.begin(), raw.end(),
              [](const Peak& a, const Peak& b) { return a.amplitude > b.amplitude; });
    std::vector<Peak> kept;
    for (const auto& p : raw) {
        bool clash = false;
        for (const auto& q : kept)
            if (std::abs(p.freq - q.freq) < min_separation_hz) { clash = true; break; }
        if (!clash) kept.push_back(p);
    }
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.freq < b.freq; });
    return kept;
}

/// Width of a spectral line at half its maximum, by linear interpolation of
/// the crossings on both sides. Throws when a crossing is not bracketed
/// before the spectrum ends or another taller feature interferes.
inline double fwhm(const Spectrum& s, const Peak& peak) {
    const auto kc = static_cast<std::size_t>(std::llround(peak.freq / s.resolution_hz));
    if (kc >= s.size()) throw std::invalid_argument("fwhm: peak outside spectrum");
    // climb to the local top in case the interpolated frequency rounds off-bin
    std::size_t k = kc;
    while (k + 1 < s.size() && s.values[k + 1] > s.values[k]) ++k;
    while (k > 0 && s.values[k - 1] > s.values[k]) --k;
    const double top = s.values[k];
    const double half = 0.5 * top;

    auto cross = [&](int dir) {
        std::size_t i = k;
        for (;;) {
            if ((dir < 0 && i == 0) || (dir > 0 && i + 1 >= s.size()))
                throw std::runtime_error("fwhm: half maximum not bracketed");
            const std::size_t j = (dir < 0) ? i - 1 : i + 1;
            if (s.values[j] > top)
                throw std::runtime_error("fwhm: neighboring feature interferes");
            if (s.values[j] <= half) {
                const double f1 = s.freqs[i], f2 = s.freqs[j];
                const double v1 = s.values[i], v2 = s.values[j];
                return f1 + (half - v1) * (f2 - f1) / (v2 - v1);
            }
            i = j;
        }
    };

    const double lo = cross(-1);
    const double hi = cross(+1);
    return hi - lo;
}

/// Labels peaks with their sideband order relative to a carrier and spacing.
inline void label_sidebands(std::vector<Peak>& peaks, double carrier_hz, double nu_ac_hz,
                            double tolerance_hz) {
    if (!(nu_ac_hz > 0.0)) return;
    for (auto& p : peaks) {
        const double k = (p.freq - carrier_hz) / nu_ac_hz;
        const double kr = std::round(k);
        if (std::abs(k - kr) * nu_ac_hz <= tolerance_hz)
            p.order_k = static_cast<int>(kr);
    }
}

struct Demodulated {
    TimeSeries envelope;
    TimeSeries phase; // unwrapped, rad, relative to the reference oscillator
};

namespace detail {

/// Windowed-sinc (Blackman) low-pass taps; cutoff and transition in Hz.
inline std::vector<double> lowpass_taps(double cutoff_hz, double transition_hz, double fs) {
    const double tw = transition_hz / fs;
    std::size_t len = static_cast<std::size_t>(std::ceil(5.5 / tw));
    if (len % 2 == 0) ++len;
    const double fc = cutoff_hz / fs;
    const auto mid = static_cast<std::ptrdiff_t>(len / 2);
    std::vector<double> h(len);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const auto m = static_cast<std::ptrdiff_t>(i) - mid;
        const double sinc = (m == 0) ? 2.0 * fc
                                     : std::sin(two_pi * fc * static_cast<double>(m)) /
                                           (pi * static_cast<double>(m));
        const double w = 0.42 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(len - 1)) +
                         0.08 * std::cos(2.0 * two_pi * static_cast<double>(i) / static_cast<double>(len - 1));
        h[i] = sinc * w;
        sum += h[i];
    }
    for (auto& v : h) v /= sum; // unity DC gain
    return h;
}

/// Zero-phase FIR filtering: symmetric taps, reflect-padded edges, group
/// delay compensated exactly (odd tap count).
inline std::vector<double> filter_zero_phase(const std::vector<double>& x,
                                             const std::vector<double>& h) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(h.size() / 2);
    auto at = [&](std::ptrdiff_t i) {
        if (i < 0) i = -i;                  // reflect
        if (i >= n) i = 2 * (n - 1) - i;    // reflect
        return x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))];
    };
    std::vector<double> y(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t m = -half; m <= half; ++m)
            acc += h[static_cast<std::size_t>(m + half)] * at(i - m);
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

} // namespace detail

/// Quadrature demodulation at ref_freq: returns the instantaneous amplitude
/// and the unwrapped phase of the component near the reference. The low-pass
/// is a linear-phase windowed-sinc FIR with transition width lp_cutoff/2, so
/// envelope timing is preserved. Samples within half a filter length of the
/// record edges are boundary-affected.
inline Demodulated demodulate(const TimeSeries& ts, double ref_freq, double lp_cutoff) {
    detail::require_uniform(ts, 16);
    const double fs = 1.0 / ts.dt;
    if (!(ref_freq > 0.0) || ref_freq >= fs / 4.0)
        throw std::invalid_argument("demodulate: need 0 < ref_freq < Nyquist/2");
    if (!(lp_cutoff > 0.0) || lp_cutoff >= ref_freq / 2.0)
        throw std::invalid_argument("demodulate: need 0 < lp_cutoff < ref_freq/2");

    const std::size_t n = ts.size();
    std::vector<double> i_mix(n), q_mix(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = ts.time_at(k);
        const double c = std::cos(two_pi * ref_freq * t);
        const double s = std::sin(two_pi * ref_freq * t);
        i_mix[k] = 2.0 * ts.values[k] * c;
        q_mix[k] = -2.0 * ts.values[k] * s;
    }
    const auto taps = detail::lowpass_taps(lp_cutoff, lp_cutoff / 2.0, fs);
    const auto i_lp = detail::filter_zero_phase(i_mix, taps);
    const auto q_lp = detail::filter_zero_phase(q_mix, taps);

    Demodulated out;
    out.envelope = TimeSeries{ts.t0, ts.dt, std::vector<double>(n), ts.unit};
    out.phase = TimeSeries{ts.t0, ts.dt, std::vector<double>(n), "rad"};
    double prev = 0.0, offset = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        out.envelope.values[k] = std::hypot(i_lp[k], q_lp[k]);
        double ph = std::atan2(q_lp[k], i_lp[k]);
        if (k > 0) {
            while (ph + offset - prev > pi) offset -= two_pi;
            while (ph + offset - prev < -pi) offset += two_pi;
        }
        prev = ph + offset;
        out.phase.values[k] = prev;
    }
    return out;
}

/// Least-squares slope of a series over [t_start, t_end], per second.
inline double series_slope(const TimeSeries& ts, double t_start, double t_end) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double t = ts.time_at(k);
        if (t < t_start || t > t_end) continue;
        sx += t;
        sy += ts.values[k];
        sxx += t * t;
        sxy += t * ts.values[k];
        ++n;
    }
    if (n < 2) throw std::invalid_argument("series_slope: fewer than 2 samples in range");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

inline void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
    os << "freq_hz,value\n";
    for (std::size_t k = 0; k < s.size(); ++k)
        os << format_double(s.freqs[k]) << ',' << format_double(s.values[k]) << "\n";
}

} // namespace spinmaser
