#pragma once

// Nonlinear Bloch dynamics of a spin ensemble under a longitudinal bias +
// oscillating drive, transverse self-feedback, relaxation, and spin-exchange
// pumping:
//
//   dPx/dt =  Py wz(t) - Pz wy(t) - Px/T2
//   dPy/dt =  Pz wx(t) - Px wz(t) - Py/T2
//   dPz/dt =  Px wy(t) - Py wx(t) - Pz/T1 + gamma_se (P_Rb - Pz)
//
// with w = 2*pi*gamma*[B0 + B_ac cos(2*pi*nu_ac t)] z_hat + 2*pi*gamma*B_f(t) y_hat
// and feedback field B_f(t) = chi * Px(t). A nonzero loop phase replaces Px in
// the feedback by its narrowband quadrature mix (Px cos(phase) + Py sin(phase)),
// which models a phase-shifting feedback circuit; phase 0 is the instantaneous
// in-phase loop. Integration happens in the lab frame; no rotating-wave
// approximation is applied to the dynamics.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spinmaser/config.hpp"
#include "spinmaser/constants.hpp"
#include "spinmaser/ode.hpp"
#include "spinmaser/rng.hpp"
#include "spinmaser/state.hpp"
#include "spinmaser/timeseries.hpp"

namespace spinmaser {

/// Transverse feedback field generated by the loop, tesla.
inline double feedback_field(double px, double chi) { return chi * px; }

/// Uniformly sampled polarization record sharing the detected grid.
struct StateSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<PolarizationState> states;

    std::size_t size() const { return states.size(); }
    double time_at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

struct SimResult {
    StateSeries states;
    TimeSeries detected; // volts
    ExperimentConfig config;
    IntegratorStats stats;

    TimeSeries component(int axis) const {
        TimeSeries ts{states.t0, states.dt, {}, "polarization"};
        ts.values.reserve(states.size());
        for (const auto& s : states.states)
            ts.values.push_back(axis == 0 ? s.px : axis == 1 ? s.py : s.pz);
        return ts;
    }
};

namespace detail {

struct BlochRhs {
    // Precomputed coefficients; hold_noise feeds a zero-order-hold noise term
    // into the loop when enabled.
    double wz_bias;      // 2*pi*gamma*b0
    double wz_drive;     // 2*pi*gamma*b_ac
    double two_pi_nu_ac;
    double gain_cos;     // 2*pi*gamma*chi*cos(phase)
    double gain_sin;     // 2*pi*gamma*chi*sin(phase)
    double inv_t2;
    double inv_t1;
    double gamma_se;
    double p_rb;
    const double* hold_noise = nullptr; // loop-noise polarization offset

    void operator()(double t, const std::array<double, 3>& y, std::array<double, 3>& dydt) const {
        const double px = y[0], py = y[1], pz = y[2];
        const double wz = wz_bias + wz_drive * std::cos(two_pi_nu_ac * t);
        double px_loop = px;
        if (hold_noise) px_loop += *hold_noise;
        const double wy = gain_cos * px_loop + gain_sin * py;
        dydt[0] = py * wz - pz * wy - px * inv_t2;
        dydt[1] = -px * wz - py * inv_t2;
        dydt[2] = px * wy - pz * inv_t1 + gamma_se * (p_rb - pz);
    }
};

inline BlochRhs make_rhs(const ExperimentConfig& c) {
    BlochRhs r{};
    const double g = two_pi * c.constants.gamma_xe;
    r.wz_bias = g * c.b0;
    r.wz_drive = g * c.b_ac;
    r.two_pi_nu_ac = two_pi * c.nu_ac;
    r.gain_cos = g * c.chi * std::cos(c.feedback_phase_rad);
    r.gain_sin = g * c.chi * std::sin(c.feedback_phase_rad);
    r.inv_t2 = 1.0 / c.t2;
    r.inv_t1 = std::isinf(c.t1) ? 0.0 : 1.0 / c.t1;
    r.gamma_se = c.gamma_se;
    r.p_rb = c.p_rb;
    return r;
}

} // namespace detail

/// Right-hand side of the polarization equations of motion at time t.
/// Throws on non-finite state components.
inline PolarizationState derivative(const PolarizationState& s, double t,
                                    const ExperimentConfig& cfg) {
    if (!std::isfinite(s.px) || !std::isfinite(s.py) || !std::isfinite(s.pz))
        throw std::domain_error("derivative: non-finite state component");
    const auto rhs = detail::make_rhs(cfg);
    std::array<double, 3> y{s.px, s.py, s.pz}, d{};
    rhs(t, y, d);
    return {d[0], d[1], d[2]};
}

/// Initial condition: longitudinal polarization of magnitude p0 aligned with
/// the pumping direction (sign of p_rb, +z when p_rb = 0), tipped by theta0
/// about x, plus the transverse ignition seed on P_x.
inline PolarizationState initial_state(const ExperimentConfig& c) {
    const double sign = c.p_rb < 0.0 ? -1.0 : 1.0;
    PolarizationState s = apply_tip({0.0, 0.0, sign * c.p0}, c.theta0);
    s.px += c.seed_transverse;
    return s;
}

/// Integrates the configured run and samples states + detected signal on the
/// uniform grid t_k = k / sample_rate, k = 0..floor(duration*sample_rate).
/// Deterministic for a fixed rng_seed.
inline SimResult integrate(const ExperimentConfig& cfg) {
    {
        const auto violations = validate_config(cfg);
        if (!violations.empty())
            throw std::invalid_argument("integrate: invalid config: " + violations.front().field +
                                        ": " + violations.front().message);
    }

    const double dt = 1.0 / cfg.sample_rate;
    // grid t_k = k*dt for k = 0..floor(duration*fs); never sample past duration
    const std::size_t n_samples =
        static_cast<std::size_t>(std::floor(cfg.duration * cfg.sample_rate + 1e-9)) + 1;

    SimResult out;
    out.config = cfg;
    out.states.t0 = 0.0;
    out.states.dt = dt;
    out.states.states.reserve(n_samples);
    out.detected.t0 = 0.0;
    out.detected.dt = dt;
    out.detected.unit = "V";
    out.detected.values.reserve(n_samples);

    // Detected-noise stream, drawn up front so the loop hold and the sampled
    // output use the same realization.
    std::vector<double> noise(n_samples, 0.0);
    if (cfg.noise_rms > 0.0) {
        Rng rng(cfg.rng_seed);
        const double sigma = cfg.noise_rms * std::sqrt(cfg.sample_rate / 2.0);
        for (auto& n : noise) n = sigma * rng.next_gauss();
    }

    auto rhs = detail::make_rhs(cfg);
    double hold = 0.0;
    if (cfg.noise_in_loop && cfg.noise_rms > 0.0 && cfg.detector_gain != 0.0)
        rhs.hold_noise = &hold;

    const PolarizationState s0 = initial_state(cfg);
    const std::array<double, 3> y0{s0.px, s0.py, s0.pz};
    const double larmor = cfg.larmor_hz();
    const double h0 = larmor > 0 ? 0.05 / larmor : dt;

    auto emit = [&](std::size_t k, const std::array<double, 3>& y) {
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !std::isfinite(y[2]))
            throw std::runtime_error("integrate: state became non-finite at t = " +
                                     std::to_string(static_cast<double>(k) * dt) + " s");
        out.states.states.push_back({y[0], y[1], y[2]});
        out.detected.values.push_back(cfg.detector_gain * y[0] + noise[k]);
    };

    auto run = [&](auto& stepper) {
        stepper.init(0.0, y0, h0);
        emit(0, y0);
        const double t_end = cfg.duration;
        std::size_t k = 1;
        while (k < n_samples) {
            const double t_k = std::min(static_cast<double>(k) * dt, t_end);
            if (rhs.hold_noise) {
                // Loop noise is held constant over the upcoming sample interval.
                hold = noise[k - 1] / cfg.detector_gain;
                stepper.refresh();
                while (stepper.t_high() < t_k)
                    stepper.step(t_k);
            } else {
                while (stepper.t_high() < t_k)
                    stepper.step(t_end);
            }
            while (k < n_samples) {
                const double tk = std::min(static_cast<double>(k) * dt, t_end);
                if (tk > stepper.t_high() + 1e-12) break;
                emit(k, stepper.sample(std::min(tk, stepper.t_high())));
                ++k;
            }
        }
        out.stats = stepper.stats();
    };

    if (cfg.integrator == IntegratorKind::AdaptiveRK45) {
        Rk45Stepper<3, detail::BlochRhs> stepper(rhs, cfg.tolerance);
        run(stepper);
    } else {
        Rk4Stepper<3, detail::BlochRhs> stepper(rhs, cfg.fixed_step);
        run(stepper);
    }
    return out;
}

inline void write_simresult_csv(std::ostream& os, const SimResult& r) {
    os << "t,px,py,pz,detected_v\n";
    for (std::size_t i = 0; i < r.states.size(); ++i) {
        const auto& s = r.states.states[i];
        os << format_double(r.states.time_at(i)) << ',' << format_double(s.px) << ','
           << format_double(s.py) << ',' << format_double(s.pz) << ','
           << format_double(r.detected.values[i]) << "\n";
    }
}

inline nlohmann::json simresult_sidecar(const SimResult& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["integrator_stats"] = {{"accepted_steps", r.stats.accepted},
                             {"rejected_steps", r.stats.rejected},
                             {"derivative_evals", r.stats.evals}};
    j["samples"] = r.states.size();
    return j;
}

} // namespace spinmaser
