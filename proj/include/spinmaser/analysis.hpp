#pragma once

// Standard per-run measurements shared by the scan command and the
// verification suites: demodulated envelope decay rate, oscillation frequency
// from the phase slope, and carrier/sideband amplitudes from the spectrum.

#include <cmath>
#include <limits>
#include <optional>

#include "spinmaser/bloch.hpp"
#include "spinmaser/fit.hpp"
#include "spinmaser/spectral.hpp"

namespace spinmaser {

inline TimeSeries slice_timeseries(const TimeSeries& ts, double t_start, double t_end) {
    TimeSeries out;
    out.dt = ts.dt;
    out.unit = ts.unit;
    bool first = true;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts.time_at(i);
        if (t < t_start - 1e-12 || t > t_end + 1e-12) continue;
        if (first) {
            out.t0 = t;
            first = false;
        }
        out.values.push_back(ts.values[i]);
    }
    return out;
}

/// Tallest bin within +-search_bins of f_target, refined by a log-parabola.
/// Works on amplitude spectra and PSDs alike.
inline Peak interpolated_peak_near(const Spectrum& s, double f_target, int search_bins = 3) {
    const auto center = static_cast<std::ptrdiff_t>(std::llround(f_target / s.resolution_hz));
    std::ptrdiff_t best = -1;
    double vbest = -1.0;
    for (std::ptrdiff_t k = center - search_bins; k <= center + search_bins; ++k) {
        if (k < 1 || k + 1 >= static_cast<std::ptrdiff_t>(s.size())) continue;
        if (s.values[static_cast<std::size_t>(k)] > vbest) {
            vbest = s.values[static_cast<std::size_t>(k)];
            best = k;
        }
    }
    if (best < 0) throw std::out_of_range("interpolated_peak_near: window outside spectrum");

    const double eps = 1e-300;
    const double la = std::log(s.values[static_cast<std::size_t>(best - 1)] + eps);
    const double lb = std::log(s.values[static_cast<std::size_t>(best)] + eps);
    const double lc = std::log(s.values[static_cast<std::size_t>(best + 1)] + eps);
    const double denom = la - 2.0 * lb + lc;
    double delta = 0.0;
    if (denom < 0.0) delta = 0.5 * (la - lc) / denom;
    if (!(delta > -0.5 && delta < 0.5)) delta = 0.0;

    Peak p;
    p.freq = (static_cast<double>(best) + delta) * s.resolution_hz;
    p.amplitude = std::exp(lb - 0.25 * (la - lc) * delta);
    return p;
}

struct AnalysisOptions {
    double t_start = 0.0;
    double t_end = std::numeric_limits<double>::infinity();
    double lp_cutoff = 0.0; // 0 = auto (ref/4, capped at 2 Hz)
    WindowKind spectrum_window = WindowKind::Hann;
};

struct RunSummary {
    double param_value = std::numeric_limits<double>::quiet_NaN();
    double fitted_rate = std::numeric_limits<double>::quiet_NaN();   // 1/s
    double carrier_freq_hz = std::numeric_limits<double>::quiet_NaN();
    double carrier_amp = std::numeric_limits<double>::quiet_NaN();   // detected units
    double sideband1_amp = std::numeric_limits<double>::quiet_NaN(); // upper first order
    double max_envelope = std::numeric_limits<double>::quiet_NaN();
};

/// Fixed measurement recipe applied to one finished run.
inline RunSummary summarize_run(const SimResult& sim, const AnalysisOptions& opt = {}) {
    RunSummary out;
    const ExperimentConfig& cfg = sim.config;
    const double ref = cfg.larmor_hz();

    const double t_end = std::min(opt.t_end, sim.detected.time_at(sim.detected.size() - 1));
    const TimeSeries windowed = slice_timeseries(sim.detected, opt.t_start, t_end);
    if (windowed.size() < 32 || !(ref > 0.0)) return out;

    double lp = opt.lp_cutoff > 0.0 ? opt.lp_cutoff : std::min(ref / 4.0, 2.0);
    const auto dm = demodulate(windowed, ref, lp);

    // skip the filter-length edges in every envelope/phase measurement
    const double edge = 0.5 * 5.5 / (lp / 2.0);
    const double t_lo = windowed.t0 + edge;
    const double t_hi = windowed.t0 + windowed.duration() - edge;
    if (t_hi <= t_lo) return out;

    const TimeSeries env = slice_timeseries(dm.envelope, t_lo, t_hi);
    if (env.size() < 10) return out;

    double emax = 0.0;
    for (const double v : env.values) emax = std::max(emax, v);
    out.max_envelope = emax;

    try {
        const auto fr = fit_exp_decay(env);
        if (fr.converged && !fr.degenerate) out.fitted_rate = fr.param("rate");
    } catch (const std::exception&) {
    }

    try {
        // The phase is meaningful only while the envelope stays above the
        // integrator's interpolation floor; clip the slope window there.
        double t_phase_hi = t_lo;
        for (std::size_t i = 0; i < env.size(); ++i)
            if (env.values[i] >= 1e-4 * emax) t_phase_hi = env.time_at(i);
        out.carrier_freq_hz =
            ref + series_slope(dm.phase, t_lo, std::min(t_hi, t_phase_hi)) / two_pi;
    } catch (const std::exception&) {
    }

    try {
        const auto spec = amplitude_spectrum(windowed, opt.spectrum_window);
        const double carrier = std::isfinite(out.carrier_freq_hz) ? out.carrier_freq_hz : ref;
        out.carrier_amp = interpolated_peak_near(spec, carrier).amplitude;
        if (cfg.nu_ac > 0.0 && carrier + cfg.nu_ac < spec.freqs.back())
            out.sideband1_amp = interpolated_peak_near(spec, carrier + cfg.nu_ac).amplitude;
    } catch (const std::exception&) {
    }
    return out;
}

} // namespace spinmaser
