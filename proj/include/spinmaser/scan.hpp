#pragma once

// Parameter sweeps: one simulation per value, run concurrently, each summarized
// with the fixed recipe from analysis.hpp. Sub-run seeds derive from the base
// seed XOR the value index, so a scan is reproducible at any concurrency.

#include <atomic>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spinmaser/analysis.hpp"
#include "spinmaser/bloch.hpp"
#include "spinmaser/transient.hpp"

namespace spinmaser {

/// Sets a named numeric field on a config copy. Besides the literal config
/// fields, accepts the virtual parameter "td", which sets chi to the signed
/// gain giving that damping time at the config's p0.
inline ExperimentConfig with_param(ExperimentConfig cfg, const std::string& name, double value) {
    if (name == "b0") cfg.b0 = value;
    else if (name == "b_ac") cfg.b_ac = value;
    else if (name == "nu_ac") cfg.nu_ac = value;
    else if (name == "chi") cfg.chi = value;
    else if (name == "t1") cfg.t1 = value;
    else if (name == "t2") cfg.t2 = value;
    else if (name == "gamma_se") cfg.gamma_se = value;
    else if (name == "p_rb") cfg.p_rb = value;
    else if (name == "p0") cfg.p0 = value;
    else if (name == "theta0") cfg.theta0 = value;
    else if (name == "seed_transverse") cfg.seed_transverse = value;
    else if (name == "noise_rms") cfg.noise_rms = value;
    else if (name == "detector_gain") cfg.detector_gain = value;
    else if (name == "duration") cfg.duration = value;
    else if (name == "sample_rate") cfg.sample_rate = value;
    else if (name == "tolerance") cfg.tolerance = value;
    else if (name == "fixed_step") cfg.fixed_step = value;
    else if (name == "feedback_phase_rad") cfg.feedback_phase_rad = value;
    else if (name == "td") cfg.chi = chi_for_damping_time(value, cfg.p0, cfg.constants);
    else throw std::invalid_argument("scan: unknown parameter '" + name + "'");
    return cfg;
}

struct ScanEntry {
    double value = 0.0;
    RunSummary summary;
};

inline std::vector<double> scan_values(double start, double stop, int count) {
    if (count < 1) throw std::invalid_argument("scan: count must be >= 1");
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        v.push_back(start);
        return v;
    }
    for (int i = 0; i < count; ++i)
        v.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
    return v;
}

/// Called once per finished sub-run, serialized across workers.
using ScanResultSink = std::function<void(std::size_t index, const SimResult&)>;

inline std::vector<ScanEntry> run_scan(const ExperimentConfig& base, const std::string& param,
                                       const std::vector<double>& values, unsigned jobs = 0,
                                       const AnalysisOptions& opt = {},
                                       const ScanResultSink& sink = {}) {
    if (values.empty()) throw std::invalid_argument("scan: empty value list");
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(values.size()));

    std::vector<ScanEntry> out(values.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(values.size());
    std::mutex sink_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            try {
                ExperimentConfig cfg = with_param(base, param, values[i]);
                cfg.rng_seed = base.rng_seed ^ static_cast<unsigned long long>(i);
                const SimResult sim = integrate(cfg);
                out[i].value = values[i];
                out[i].summary = summarize_run(sim, opt);
                out[i].summary.param_value = values[i];
                if (sink) {
                    std::lock_guard<std::mutex> lock(sink_mutex);
                    sink(i, sim);
                }
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < values.size(); ++i)
        if (!errors[i].empty())
            throw std::runtime_error("scan: sub-run " + std::to_string(i) + " failed: " + errors[i]);
    return out;
}

inline void write_scan_csv(std::ostream& os, const std::string& param,
                           const std::vector<ScanEntry>& entries) {
    os << param << ",fitted_rate,carrier_freq_hz,carrier_amp,sideband1_amp,max_envelope\n";
    for (const auto& e : entries) {
        os << format_double(e.value) << ',' << format_double(e.summary.fitted_rate) << ','
           << format_double(e.summary.carrier_freq_hz) << ','
           << format_double(e.summary.carrier_amp) << ','
           << format_double(e.summary.sideband1_amp) << ','
           << format_double(e.summary.max_envelope) << "\n";
    }
}

} // namespace spinmaser
