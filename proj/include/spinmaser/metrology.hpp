#pragma once

// Magnetometer calibration chain and the conversion to an equivalent
// spin-coupled exotic-field reach:
//
//   response      xi [V] = kappa * B_ac[nT] / nu_ac[Hz]        (small index)
//   sensitivity   dB(nu) = noise_floor * nu / kappa            (per sqrt(Hz))
//   coupling      g(nu)  = dB(nu) * |g_n| / c_B
//   limit         g_lim  = g / sqrt(T_m)
//
// Two response constants with different provenance are kept side by side (see
// ResponseModel); calibration from data overrides either.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinmaser/constants.hpp"
#include "spinmaser/spectral.hpp"

namespace spinmaser {

// Quoted small-index maser response, V*Hz/nT.
inline constexpr double kappa_response_quoted = 5.5e-3;
// Alternative value implied by the inverse-frequency calibration fit
// (0.017 V*Hz at B_ac = 2.25 nT); disagrees with the quoted constant by ~30%.
inline constexpr double kappa_response_from_fit = 0.017 / 2.25;

struct ResponseModel {
    double kappa = kappa_response_quoted; // V*Hz/nT
    double nu_min = 1e-3;                 // validity range, Hz
    double nu_max = 22.0;
    double max_mod_index = 0.5;           // linearity bound on gamma*B_ac/nu_ac

    bool in_range(double nu) const { return nu >= nu_min && nu <= nu_max; }
};

struct SensitivityPoint {
    double freq_hz;
    double delta_b; // T/sqrt(Hz)
};

struct SensitivityCurve {
    std::vector<SensitivityPoint> points;
    double noise_floor = 0.0; // V/sqrt(Hz)
    bool measured = false;    // false = modeled from a response constant
};

struct AxionParams {
    double mass_ev = 1e-15;
    double coupling_g_ann = 0.0;  // GeV^-1
    double conversion_c_b = 6e-8; // T*GeV, effective-field constant
    double g_n = -1.5;
};

// Sensitivity constant quoted for the coupling chain, GeV^-1 per Hz of signal
// frequency per sqrt(Hz) of bandwidth. Does not follow from the explicit
// conversion chain below (factor ~6.7 apart); both are reported, never mixed.
inline constexpr double quoted_coupling_per_hz = 2.7e-5;

/// Effective field seen by the in-cell detector due to transverse
/// magnetization m_x (A/m), scaled by the contact enhancement kappa0.
/// SI output: (8*pi/3) * kappa0 * (mu0/4pi) * M_x. Set gaussian_units for the
/// bare (8*pi/3) * kappa0 * M_x form with M_x in emu/cm^3 (returns gauss).
inline double effective_detection_field(double m_x, double kappa0, bool gaussian_units = false,
                                        const PhysicalConstants& c = {}) {
    if (!(kappa0 > 0.0)) throw std::domain_error("effective_detection_field: kappa0 must be > 0");
    const double geometric = 8.0 * pi / 3.0;
    if (gaussian_units) return geometric * kappa0 * m_x;
    return geometric * kappa0 * (c.mu0 / (4.0 * pi)) * m_x;
}

struct ResponsePrediction {
    double volts;
    bool nonlinearity_warning; // modulation index above the linearity bound
};

/// Predicted first-order sideband response, volts, for a drive of b_ac (nT)
/// at nu_ac (Hz).
inline ResponsePrediction predicted_response(double b_ac_nt, double nu_ac_hz,
                                             const ResponseModel& model,
                                             const PhysicalConstants& c = {}) {
    if (!(nu_ac_hz > 0.0)) throw std::domain_error("predicted_response: nu_ac must be > 0");
    if (!(model.kappa > 0.0)) throw std::domain_error("predicted_response: kappa must be > 0");
    const double index = modulation_index(b_ac_nt * nano, nu_ac_hz, c);
    return {model.kappa * b_ac_nt / nu_ac_hz, index > model.max_mod_index};
}

/// Median sqrt-PSD over bins outside the exclusion intervals, V/sqrt(Hz).
inline double noise_floor(const Spectrum& spec,
                          const std::vector<std::pair<double, double>>& exclusion = {}) {
    if (spec.kind != SpectrumKind::Psd)
        throw std::invalid_argument("noise_floor: spectrum must be a PSD");
    std::vector<double> kept;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = spec.freqs[k];
        bool masked = false;
        for (const auto& [lo, hi] : exclusion)
            if (f >= lo && f <= hi) { masked = true; break; }
        if (!masked) kept.push_back(spec.values[k]);
    }
    if (kept.size() < 20)
        throw std::runtime_error("noise_floor: fewer than 20 unmasked bins");
    std::nth_element(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(kept.size() / 2),
                     kept.end());
    return std::sqrt(kept[kept.size() / 2]);
}

/// Field sensitivity delta_B = noise * nu / kappa, tesla per sqrt(Hz).
/// noise is in V/sqrt(Hz), kappa in V*Hz/nT.
inline double field_sensitivity(double noise_v_per_rthz, const ResponseModel& model,
                                double nu_ac_hz) {
    if (!(nu_ac_hz > 0.0)) throw std::domain_error("field_sensitivity: nu_ac must be > 0");
    if (!(model.kappa > 0.0)) throw std::domain_error("field_sensitivity: kappa must be > 0");
    return (noise_v_per_rthz / model.kappa) * nu_ac_hz * nano;
}

inline SensitivityCurve modeled_sensitivity_curve(double noise_v_per_rthz,
                                                  const ResponseModel& model,
                                                  const std::vector<double>& freqs_hz) {
    SensitivityCurve c;
    c.noise_floor = noise_v_per_rthz;
    c.measured = false;
    c.points.reserve(freqs_hz.size());
    for (const double f : freqs_hz)
        c.points.push_back({f, field_sensitivity(noise_v_per_rthz, model, f)});
    return c;
}

/// Oscillation frequency equivalent to a particle mass: nu = m c^2 / h. The
/// mass arrives in eV, which is already the rest energy, so only the eV->J
/// conversion and h enter numerically.
inline double axion_frequency(double mass_ev, const PhysicalConstants& c = {}) {
    if (!(mass_ev > 0.0)) throw std::domain_error("axion_frequency: mass must be > 0");
    return mass_ev * c.ev_to_joule / c.planck_h;
}

/// Effective oscillating field equivalent of a spin coupling g_ann:
/// |c_B * g_ann / g_n| in tesla.
inline double axion_effective_field(double g_ann, const AxionParams& p) {
    if (p.g_n == 0.0) throw std::domain_error("axion_effective_field: g_n must be nonzero");
    return std::abs(p.conversion_c_b * g_ann / p.g_n);
}

/// Coupling reach per sqrt(Hz) at frequency nu from a sensitivity curve:
/// the exact inverse of axion_effective_field applied to delta_B(nu).
inline double coupling_sensitivity(const SensitivityCurve& curve, double nu,
                                   const AxionParams& p) {
    if (curve.points.empty()) throw std::invalid_argument("coupling_sensitivity: empty curve");
    if (nu < curve.points.front().freq_hz || nu > curve.points.back().freq_hz)
        throw std::out_of_range("coupling_sensitivity: frequency outside curve range");
    // linear interpolation on the curve
    double db = curve.points.back().delta_b;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        if (nu <= curve.points[i].freq_hz) {
            const auto& a = curve.points[i - 1];
            const auto& b = curve.points[i];
            const double w = (b.freq_hz == a.freq_hz) ? 0.0 : (nu - a.freq_hz) / (b.freq_hz - a.freq_hz);
            db = a.delta_b + w * (b.delta_b - a.delta_b);
            break;
        }
    }
    return db * std::abs(p.g_n) / p.conversion_c_b;
}

/// Integrated coupling limit after measurement time t_m seconds.
inline double coupling_limit(double sensitivity_per_rthz, double t_m) {
    if (!(t_m > 0.0)) throw std::domain_error("coupling_limit: t_m must be > 0");
    return sensitivity_per_rthz / std::sqrt(t_m);
}

inline void write_sensitivity_csv(std::ostream& os, const SensitivityCurve& c) {
    os << "freq_hz,delta_b_tesla_per_rthz\n";
    for (const auto& p : c.points)
        os << format_double(p.freq_hz) << ',' << format_double(p.delta_b) << "\n";
}

} // namespace spinmaser
