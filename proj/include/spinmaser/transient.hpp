#pragma once

// Closed-form solutions for the undriven feedback-damped ensemble, plus the
// threshold and frequency-pulling relations. These are the independent checks
// for the time-domain integrator.
//
// With transverse decoherence time T2 and feedback damping time Td, a state
// tipped by theta0 from full polarization p0 evolves with envelope
//
//   |P+|(t) = p0 (Td/T2) q sech[(q/T2)(t - t0)]
//   Pz(t)   = p0 (Td/T2) (q tanh[(q/T2)(t - t0)] - 1)
//
//   q  = sqrt(1 + r^2 + 2 r cos(theta0)),          r = T2/Td
//   t0 = -(T2/q) atanh[(r cos(theta0) + 1)/q]
//
// Longitudinal relaxation and pumping are outside this model.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spinmaser/constants.hpp"

namespace spinmaser {

struct TransientParams {
    double theta0 = pi / 15;  // rad
    double t2 = 13.65;        // s
    double td = 6.25;         // s (infinity = feedback off)
    double p0 = 1.0;
    double alpha_pulling = 0.235;
};

/// Combined transverse decay time 1/(1/t2 + 1/td). td may be infinite.
inline double effective_t2(double t2, double td) {
    if (!(t2 > 0.0) || !(td > 0.0))
        throw std::domain_error("effective_t2: t2 and td must be > 0");
    if (std::isinf(td)) return t2;
    if (std::isinf(t2)) return td;
    return 1.0 / (1.0 / t2 + 1.0 / td);
}

inline double q_factor(double theta0, double t2, double td) {
    const double r = t2 / td;
    const double q2 = 1.0 + r * r + 2.0 * r * std::cos(theta0);
    return std::sqrt(q2 > 0.0 ? q2 : 0.0);
}

struct PeakTimeResult {
    double t0 = 0.0;
    // True when the envelope decreases monotonically for all t >= 0, i.e.
    // t0 <= 0. Small tips give finite negative t0; the exact theta0 -> 0
    // limit gives the -infinity sentinel. The opposite sentinel,
    // t0 = +infinity, marks an exactly inverted state whose transverse
    // component never ignites.
    bool monotone_decay = false;

    bool finite() const { return std::isfinite(t0); }
};

/// Time of the envelope maximum. A burst (t0 > 0) occurs only for
/// near-inverted tips with td < t2.
inline PeakTimeResult peak_time(double theta0, double t2, double td) {
    const double q = q_factor(theta0, t2, td);
    if (!(q > 0.0))
        throw std::domain_error("peak_time: q factor vanishes (theta0 = pi with td = t2)");
    const double r = t2 / td;
    const double a = (r * std::cos(theta0) + 1.0) / q;
    const double inf = std::numeric_limits<double>::infinity();
    if (a >= 1.0) return {-inf, true};
    if (a <= -1.0) return {+inf, false};
    const double t0 = -(t2 / q) * std::atanh(a);
    return {t0, t0 <= 0.0};
}

struct TransientPoint {
    double p_plus_mag; // |P+|
    double p_z;
};

/// Envelope and longitudinal polarization at time t. Handles the sentinel
/// regimes through the IEEE limits of sech/tanh.
inline TransientPoint transient_envelope(double t, const TransientParams& p) {
    const double q = q_factor(p.theta0, p.t2, p.td);
    if (!(q > 0.0))
        throw std::domain_error("transient_envelope: q factor vanishes");
    const double t0 = peak_time(p.theta0, p.t2, p.td).t0;
    const double x = (q / p.t2) * (t - t0);
    const double scale = p.p0 * (p.td / p.t2);
    const double sech = 1.0 / std::cosh(x); // 0 at x = +-inf
    return {scale * q * sech, scale * (q * std::tanh(x) - 1.0)};
}

/// Pulling of the feedback-damped oscillation frequency away from Larmor,
/// delta_nu = alpha / td in Hz. The loop-dependent constant alpha is
/// apparatus-specific; for a loop with fixed phase error phi this model gives
/// alpha = tan(phi) / (2*pi).
inline double frequency_pulling(double td, double alpha) {
    if (!(td > 0.0)) throw std::domain_error("frequency_pulling: td must be > 0");
    return alpha / td;
}

/// Self-sustained oscillation threshold for a continuously pumped inverted
/// ensemble: the damping time must beat intrinsic decoherence.
inline bool is_masing(double td, double t2) {
    if (!(td > 0.0) || !(t2 > 0.0)) throw std::domain_error("is_masing: times must be > 0");
    return td / t2 < 1.0;
}

/// Damping time of the linearized transverse dynamics about a longitudinal
/// state of magnitude p0 under feedback gain chi. Only the co-rotating half
/// of the x-only feedback field damps the precessing component, so the rate
/// is pi*|gamma*chi*p0| (not 2*pi*...); the simulator cross-checks this map.
inline double damping_time_from_gain(double chi, double p0, const PhysicalConstants& c = {}) {
    const double prod = std::abs(chi) * std::abs(p0);
    if (prod == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (pi * c.gamma_abs() * prod);
}

/// Gain magnitude producing damping time td at polarization p0.
inline double gain_from_damping_time(double td, double p0, const PhysicalConstants& c = {}) {
    if (!(td > 0.0) || !(p0 > 0.0))
        throw std::domain_error("gain_from_damping_time: td and p0 must be > 0");
    if (std::isinf(td)) return 0.0;
    return 1.0 / (pi * c.gamma_abs() * td * p0);
}

/// Signed feedback gain that damps transverse motion when the longitudinal
/// polarization points along +z (and provides gain when it is inverted).
/// Damping requires sign(gamma * chi * Pz) > 0.
inline double chi_for_damping_time(double td, double p0, const PhysicalConstants& c = {}) {
    return std::copysign(gain_from_damping_time(td, p0, c), c.gamma_xe);
}

} // namespace spinmaser
