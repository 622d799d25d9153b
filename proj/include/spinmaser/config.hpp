#pragma once

// Experiment configuration: every physical and numerical parameter of one
// simulated run. Values are SI (tesla, seconds, hertz). Instances are
// immutable value objects once validated; share them freely across threads.

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinmaser/constants.hpp"

namespace spinmaser {

enum class IntegratorKind { AdaptiveRK45, FixedRK4 };

struct ExperimentConfig {
    double b0 = 755.5e-9;        // bias field, T; sign encodes +z / -z orientation
    double b_ac = 0.0;           // drive amplitude, T (>= 0)
    double nu_ac = 0.0;          // drive frequency, Hz (>= 0)
    double chi = 0.0;            // feedback gain, T per unit polarization; 0 disables
    double t1 = 21.5;            // longitudinal relaxation time, s (may be inf)
    double t2 = 13.65;           // intrinsic transverse decoherence time, s
    double gamma_se = 0.05;      // spin-exchange pumping rate, 1/s (non-measured placeholder)
    double p_rb = 0.5;           // alkali polarization, signed (non-measured placeholder)
    double p0 = 0.01;            // initial longitudinal polarization magnitude (placeholder)
    double theta0 = 0.0;         // initial tip angle about x, rad
    double seed_transverse = 0.0; // initial transverse seed added on P_x
    double noise_rms = 0.0;      // detected-signal white-noise density, V/sqrt(Hz)
    double detector_gain = 1.0;  // V per unit P_x
    double duration = 10.0;      // s
    double sample_rate = 200.0;  // Hz
    unsigned long long rng_seed = 1;
    IntegratorKind integrator = IntegratorKind::AdaptiveRK45;
    double tolerance = 1e-9;     // adaptive local error per unit step
    double fixed_step = 1e-3;    // s, fixed-step integrator only
    bool noise_in_loop = false;  // feed detected noise back through chi
    double feedback_phase_rad = 0.0; // loop phase; 0 = instantaneous in-phase feedback

    PhysicalConstants constants{};

    double larmor_hz() const { return larmor_frequency(b0, constants); }
};

struct ConfigViolation {
    std::string field;
    std::string message;
};

/// Checks every config invariant; returns an empty list iff the config is valid.
inline std::vector<ConfigViolation> validate_config(const ExperimentConfig& c) {
    std::vector<ConfigViolation> v;
    auto bad = [&v](const std::string& f, const std::string& m) { v.push_back({f, m}); };

    if (!(c.t1 > 0.0)) bad("t1", "t1 must be > 0");
    if (!(c.t2 > 0.0)) bad("t2", "t2 must be > 0");
    if (!(c.duration > 0.0)) bad("duration", "duration must be > 0");
    if (!(c.sample_rate > 0.0)) {
        bad("sample_rate", "sample_rate must be > 0");
    } else {
        const double nyq_need = 4.0 * c.constants.gamma_abs() * std::abs(c.b0);
        if (!(c.sample_rate > nyq_need))
            bad("sample_rate", "sample_rate must exceed 4*|gamma*b0| = " +
                                   std::to_string(nyq_need) + " Hz");
    }
    if (c.b_ac < 0.0) bad("b_ac", "b_ac must be >= 0");
    if (c.nu_ac < 0.0) bad("nu_ac", "nu_ac must be >= 0");
    if (!(c.p0 >= 0.0 && c.p0 <= 1.0)) bad("p0", "p0 must lie in [0, 1]");
    if (!(std::abs(c.theta0) <= pi)) bad("theta0", "|theta0| must be <= pi");
    if (c.seed_transverse < 0.0) bad("seed_transverse", "seed_transverse must be >= 0");
    if (c.noise_rms < 0.0) bad("noise_rms", "noise_rms must be >= 0");
    if (!(c.tolerance > 0.0)) bad("tolerance", "tolerance must be > 0");
    if (!(c.fixed_step > 0.0)) bad("fixed_step", "fixed_step must be > 0");
    if (!std::isfinite(c.b0)) bad("b0", "b0 must be finite");
    return v;
}

namespace detail {

// Accepts a JSON number, or the strings "inf"/"infinity" for unbounded times.
inline double number_or_inf(const nlohmann::json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        throw std::runtime_error("config key '" + key + "': unrecognized string value '" + s + "'");
    }
    return v.get<double>();
}

} // namespace detail

/// Parses a flat key-value JSON document. Keys match the field names exactly;
/// unknown keys are an error. Missing keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "b0", "b_ac", "nu_ac", "chi", "t1", "t2", "gamma_se", "p_rb", "p0",
        "theta0", "seed_transverse", "noise_rms", "detector_gain", "duration",
        "sample_rate", "rng_seed", "integrator", "tolerance", "fixed_step",
        "noise_in_loop", "feedback_phase_rad"};
    if (!j.is_object())
        throw std::runtime_error("config: top-level JSON value must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw std::runtime_error("config: unknown key '" + it.key() + "'");
    }

    ExperimentConfig c;
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = detail::number_or_inf(j, key);
    };
    num("b0", c.b0);
    num("b_ac", c.b_ac);
    num("nu_ac", c.nu_ac);
    num("chi", c.chi);
    num("t1", c.t1);
    num("t2", c.t2);
    num("gamma_se", c.gamma_se);
    num("p_rb", c.p_rb);
    num("p0", c.p0);
    num("theta0", c.theta0);
    num("seed_transverse", c.seed_transverse);
    num("noise_rms", c.noise_rms);
    num("detector_gain", c.detector_gain);
    num("duration", c.duration);
    num("sample_rate", c.sample_rate);
    num("tolerance", c.tolerance);
    num("fixed_step", c.fixed_step);
    num("feedback_phase_rad", c.feedback_phase_rad);
    if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<unsigned long long>();
    if (j.contains("noise_in_loop")) c.noise_in_loop = j.at("noise_in_loop").get<bool>();
    if (j.contains("integrator")) {
        const std::string s = j.at("integrator").get<std::string>();
        if (s == "rk45" || s == "adaptive")
            c.integrator = IntegratorKind::AdaptiveRK45;
        else if (s == "rk4" || s == "fixed")
            c.integrator = IntegratorKind::FixedRK4;
        else
            throw std::runtime_error("config: integrator must be 'rk45' or 'rk4'");
    }
    return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    auto put = [&j](const char* key, double v) {
        if (std::isinf(v))
            j[key] = "inf";
        else
            j[key] = v;
    };
    put("b0", c.b0);
    put("b_ac", c.b_ac);
    put("nu_ac", c.nu_ac);
    put("chi", c.chi);
    put("t1", c.t1);
    put("t2", c.t2);
    put("gamma_se", c.gamma_se);
    put("p_rb", c.p_rb);
    put("p0", c.p0);
    put("theta0", c.theta0);
    put("seed_transverse", c.seed_transverse);
    put("noise_rms", c.noise_rms);
    put("detector_gain", c.detector_gain);
    put("duration", c.duration);
    put("sample_rate", c.sample_rate);
    j["rng_seed"] = c.rng_seed;
    j["integrator"] = c.integrator == IntegratorKind::AdaptiveRK45 ? "rk45" : "rk4";
    put("tolerance", c.tolerance);
    put("fixed_step", c.fixed_step);
    j["noise_in_loop"] = c.noise_in_loop;
    put("feedback_phase_rad", c.feedback_phase_rad);
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

} // namespace spinmaser
