// spinmaser: command-line front end for the spin-maser simulation library.
//
// Subcommands:
//   simulate     integrate a configured run, write the time series
//   spectrum     Fourier-analyze a recorded time series, list peaks
//   scan         sweep one config parameter across simulated sub-runs
//   sensitivity  magnetometer sensitivity curve and coupling-reach table
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinmaser/analysis.hpp"
#include "spinmaser/bloch.hpp"
#include "spinmaser/config.hpp"
#include "spinmaser/io.hpp"
#include "spinmaser/metrology.hpp"
#include "spinmaser/scan.hpp"
#include "spinmaser/spectral.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_numeric = 3;

namespace fs = std::filesystem;
using namespace spinmaser;

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

int load_validated_config(const std::string& path, ExperimentConfig& cfg) {
    try {
        cfg = load_config(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    const auto violations = validate_config(cfg);
    if (!violations.empty()) {
        std::cerr << "error: invalid config '" << path << "':\n";
        for (const auto& v : violations)
            std::cerr << "  " << v.field << ": " << v.message << "\n";
        return exit_usage;
    }
    return exit_ok;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg;
    if (int rc = load_validated_config(config_path, cfg); rc != exit_ok) return rc;

    WallClock clock;
    SimResult result;
    try {
        result = integrate(cfg);
    } catch (const StiffnessError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }

    try {
        ensure_dir(out_dir);
        {
            std::ostringstream csv;
            write_simresult_csv(csv, result);
            write_text_file(join_path(out_dir, "timeseries.csv"), csv.str());
        }
        write_text_file(join_path(out_dir, "timeseries.json"),
                        simresult_sidecar(result).dump(2) + "\n");
        RunManifest m;
        m.command = "simulate";
        m.config_path = config_path;
        m.inputs = {config_path};
        m.outputs = {"timeseries.csv", "timeseries.json"};
        m.rng_seed = cfg.rng_seed;
        m.wall_time_s = clock.seconds();
        write_manifest(out_dir, m);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    std::cout << "wrote " << join_path(out_dir, "timeseries.csv") << " (" << result.states.size()
              << " samples, " << result.stats.accepted << " steps)\n";
    return exit_ok;
}

int cmd_spectrum(const std::string& input_csv, const std::string& out_dir,
                 const std::string& window_name_arg, bool want_psd, const std::string& column,
                 double rel_threshold, double min_separation, double nu_ac, double t_start,
                 double t_end) {
    WindowKind window;
    if (window_name_arg == "rect" || window_name_arg == "rectangular")
        window = WindowKind::Rectangular;
    else if (window_name_arg == "hann")
        window = WindowKind::Hann;
    else {
        std::cerr << "error: unknown window '" << window_name_arg << "'\n";
        return exit_usage;
    }

    TimeSeries ts;
    try {
        ts = read_timeseries_csv_file(input_csv, column);
        if (t_start > 0.0 || t_end > 0.0)
            ts = slice_timeseries(ts, t_start, t_end > 0.0 ? t_end : 1e300);
        if (ts.size() < 16) throw std::runtime_error("time window leaves too few samples");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }

    WallClock clock;
    try {
        const Spectrum spec = want_psd ? psd(ts, PsdMethod::Periodogram, 16, window)
                                       : amplitude_spectrum(ts, window);
        auto peaks = find_peaks(spec, rel_threshold,
                                min_separation > 0 ? min_separation : 2.0 * spec.resolution_hz);
        for (auto& p : peaks) {
            try {
                p.fwhm = fwhm(spec, p);
            } catch (const std::exception&) {
                // leave NaN when the line is not isolated enough to measure
            }
        }
        if (nu_ac > 0.0 && !peaks.empty()) {
            double carrier = 0.0, amp = -1.0;
            for (const auto& p : peaks)
                if (p.amplitude > amp) { amp = p.amplitude; carrier = p.freq; }
            label_sidebands(peaks, carrier, nu_ac, 3.0 * spec.resolution_hz);
        }

        ensure_dir(out_dir);
        {
            std::ostringstream csv;
            write_spectrum_csv(csv, spec);
            write_text_file(join_path(out_dir, "spectrum.csv"), csv.str());
        }
        nlohmann::json sidecar = {{"kind", spec.kind == SpectrumKind::Psd ? "psd" : "amplitude"},
                                  {"window", spinmaser::window_name(spec.window)},
                                  {"resolution_hz", spec.resolution_hz},
                                  {"samples", ts.size()}};
        write_text_file(join_path(out_dir, "spectrum.json"), sidecar.dump(2) + "\n");

        nlohmann::json jp = nlohmann::json::array();
        for (const auto& p : peaks) {
            nlohmann::json e = {{"freq_hz", p.freq}, {"amplitude", p.amplitude}};
            if (std::isfinite(p.fwhm)) e["fwhm_hz"] = p.fwhm;
            if (p.order_k) e["order_k"] = *p.order_k;
            jp.push_back(e);
        }
        write_text_file(join_path(out_dir, "peaks.json"), jp.dump(2) + "\n");

        RunManifest m;
        m.command = "spectrum";
        m.inputs = {input_csv};
        m.outputs = {"spectrum.csv", "spectrum.json", "peaks.json"};
        m.wall_time_s = clock.seconds();
        write_manifest(out_dir, m);
        std::cout << "wrote " << join_path(out_dir, "spectrum.csv") << " (" << peaks.size()
                  << " peaks)\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_ok;
}

int cmd_scan(const std::string& config_path, const std::string& out_dir, const std::string& param,
             double start, double stop, int count, const std::string& values_arg, unsigned jobs,
             double t_start, double t_end, bool keep_runs) {
    ExperimentConfig base;
    if (int rc = load_validated_config(config_path, base); rc != exit_ok) return rc;

    std::vector<double> values;
    try {
        if (!values_arg.empty()) {
            std::stringstream ss(values_arg);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) values.push_back(parse_double(tok));
        } else if (count > 0) {
            values = scan_values(start, stop, count);
        }
        if (values.empty()) {
            std::cerr << "error: scan over an empty value list\n";
            return exit_usage;
        }
        // every sub-run config must itself be valid
        for (const double v : values) {
            const auto violations = validate_config(with_param(base, param, v));
            if (!violations.empty()) {
                std::cerr << "error: " << param << " = " << v
                          << " violates: " << violations.front().field << ": "
                          << violations.front().message << "\n";
                return exit_usage;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }

    WallClock clock;
    try {
        ensure_dir(out_dir);
        AnalysisOptions opt;
        opt.t_start = t_start;
        if (t_end > 0) opt.t_end = t_end;

        ScanResultSink sink;
        if (keep_runs) {
            sink = [&](std::size_t i, const SimResult& sim) {
                char name[32];
                std::snprintf(name, sizeof(name), "run_%03zu", i);
                const std::string dir = join_path(out_dir, name);
                ensure_dir(dir);
                std::ostringstream csv;
                write_simresult_csv(csv, sim);
                write_text_file(join_path(dir, "timeseries.csv"), csv.str());
                write_text_file(join_path(dir, "timeseries.json"),
                                simresult_sidecar(sim).dump(2) + "\n");
            };
        }

        const auto entries = run_scan(base, param, values, jobs, opt, sink);
        std::ostringstream csv;
        write_scan_csv(csv, param, entries);
        write_text_file(join_path(out_dir, "scan.csv"), csv.str());

        RunManifest m;
        m.command = "scan";
        m.config_path = config_path;
        m.inputs = {config_path};
        m.outputs = {"scan.csv"};
        m.rng_seed = base.rng_seed;
        m.wall_time_s = clock.seconds();
        write_manifest(out_dir, m);
        std::cout << "wrote " << join_path(out_dir, "scan.csv") << " (" << entries.size()
                  << " sub-runs)\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_ok;
}

int cmd_sensitivity(double noise, const std::string& record_csv,
                    const std::vector<std::string>& exclude_args, double kappa,
                    const std::string& grid_arg, double t_m, bool paper_constants,
                    const std::string& out_dir) {
    // frequency grid lo:hi:n, logarithmic
    double lo = 1e-3, hi = 1.0;
    int n = 50;
    try {
        if (!grid_arg.empty()) {
            std::stringstream ss(grid_arg);
            std::string a, b, c;
            if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
                throw std::runtime_error("grid must be lo:hi:count");
            lo = parse_double(a);
            hi = parse_double(b);
            n = static_cast<int>(parse_double(c));
        }
        if (!(lo > 0) || !(hi > lo) || n < 1) throw std::runtime_error("bad frequency grid");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }

    WallClock clock;
    try {
        if (!record_csv.empty()) {
            TimeSeries ts;
            try {
                ts = read_timeseries_csv_file(record_csv, "detected_v");
            } catch (const std::exception&) {
                ts = read_timeseries_csv_file(record_csv, "");
            }
            std::vector<std::pair<double, double>> exclusion;
            for (const auto& arg : exclude_args) {
                const auto colon = arg.find(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("exclude interval must be lo:hi");
                exclusion.emplace_back(parse_double(arg.substr(0, colon)),
                                       parse_double(arg.substr(colon + 1)));
            }
            noise = noise_floor(psd(ts, PsdMethod::AveragedSegments), exclusion);
            std::cout << "measured noise floor: " << noise << " V/sqrt(Hz)\n";
        }
        if (!(noise > 0)) {
            std::cerr << "error: provide --noise or --record\n";
            return exit_usage;
        }

        ResponseModel model;
        model.kappa = kappa;
        model.nu_min = lo;
        model.nu_max = hi;

        std::vector<double> freqs;
        freqs.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double f = n == 1 ? lo
                                    : lo * std::pow(hi / lo, static_cast<double>(i) /
                                                                 static_cast<double>(n - 1));
            freqs.push_back(f);
        }
        const auto curve = modeled_sensitivity_curve(noise, model, freqs);

        ensure_dir(out_dir);
        {
            std::ostringstream csv;
            write_sensitivity_csv(csv, curve);
            write_text_file(join_path(out_dir, "sensitivity.csv"), csv.str());
        }
        {
            AxionParams ap;
            PhysicalConstants pc;
            std::ostringstream csv;
            csv << "mass_ev,freq_hz,g_ann_limit\n";
            for (const auto& pt : curve.points) {
                const double mass = pt.freq_hz * pc.planck_h / pc.ev_to_joule;
                const double per_rthz = paper_constants
                                            ? quoted_coupling_per_hz * pt.freq_hz
                                            : coupling_sensitivity(curve, pt.freq_hz, ap);
                csv << format_double(mass) << ',' << format_double(pt.freq_hz) << ','
                    << format_double(coupling_limit(per_rthz, t_m)) << "\n";
            }
            write_text_file(join_path(out_dir, "axion_reach.csv"), csv.str());
        }

        RunManifest m;
        m.command = "sensitivity";
        if (!record_csv.empty()) m.inputs = {record_csv};
        m.outputs = {"sensitivity.csv", "axion_reach.csv"};
        m.wall_time_s = clock.seconds();
        write_manifest(out_dir, m);
        std::cout << "wrote " << join_path(out_dir, "sensitivity.csv") << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-maser simulation and analysis toolkit"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_out;
    auto* simulate = app.add_subcommand("simulate", "integrate a configured run");
    simulate->add_option("--config", sim_config, "config JSON path")->required();
    simulate->add_option("--out", sim_out, "output directory")->required();

    // spectrum
    std::string sp_input, sp_out, sp_window = "rect", sp_column;
    bool sp_psd = false;
    double sp_threshold = 0.05, sp_minsep = 0.0, sp_nuac = 0.0, sp_tstart = 0.0, sp_tend = 0.0;
    auto* spectrum = app.add_subcommand("spectrum", "Fourier analysis of a time-series CSV");
    spectrum->add_option("--input", sp_input, "time-series CSV path")->required();
    spectrum->add_option("--out", sp_out, "output directory")->required();
    spectrum->add_option("--window", sp_window, "rect | hann");
    spectrum->add_option("--column", sp_column, "value column name (default: second column)");
    spectrum->add_flag("--psd", sp_psd, "power spectral density instead of amplitude");
    spectrum->add_option("--rel-threshold", sp_threshold, "peak threshold relative to max");
    spectrum->add_option("--min-separation", sp_minsep, "minimum peak separation, Hz");
    spectrum->add_option("--nu-ac", sp_nuac, "drive frequency for sideband labeling, Hz");
    spectrum->add_option("--t-start", sp_tstart, "analyze samples from this time on, s");
    spectrum->add_option("--t-end", sp_tend, "analyze samples up to this time, s");

    // scan
    std::string sc_config, sc_out, sc_param, sc_values;
    double sc_start = 0, sc_stop = 0, sc_tstart = 0, sc_tend = 0;
    int sc_count = 0;
    unsigned sc_jobs = 0;
    bool sc_keep = false;
    auto* scan = app.add_subcommand("scan", "sweep one config parameter");
    scan->add_option("--config", sc_config, "base config JSON path")->required();
    scan->add_option("--out", sc_out, "output directory")->required();
    scan->add_option("--param", sc_param, "config field to sweep (or 'td')")->required();
    scan->add_option("--start", sc_start, "sweep start value");
    scan->add_option("--stop", sc_stop, "sweep stop value");
    scan->add_option("--count", sc_count, "number of sweep points");
    scan->add_option("--values", sc_values, "explicit comma-separated values");
    scan->add_option("--jobs", sc_jobs, "parallel sub-runs (default: processors)");
    scan->add_option("--t-start", sc_tstart, "analysis window start, s");
    scan->add_option("--t-end", sc_tend, "analysis window end, s");
    scan->add_flag("--keep-runs", sc_keep, "write per-run time series");

    // sensitivity
    std::string se_record, se_grid, se_out;
    std::vector<std::string> se_exclude;
    double se_noise = 0.0, se_kappa = kappa_response_quoted, se_tm = 1e4;
    bool se_paper = false;
    auto* sens = app.add_subcommand("sensitivity", "sensitivity curve and coupling reach");
    sens->add_option("--noise", se_noise, "detected noise floor, V/sqrt(Hz)");
    sens->add_option("--record", se_record, "measure the floor from this time-series CSV");
    sens->add_option("--exclude", se_exclude, "PSD exclusion interval lo:hi (repeatable)");
    sens->add_option("--kappa", se_kappa, "response constant, V*Hz/nT");
    sens->add_option("--grid", se_grid, "log frequency grid lo:hi:count (default 1e-3:1:50)");
    sens->add_option("--tm", se_tm, "integration time for the reach column, s");
    sens->add_flag("--paper-constants", se_paper,
                   "use the quoted per-sqrt(Hz) coupling constant instead of the explicit chain");
    sens->add_option("--out", se_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    if (sc_jobs == 0) {
        if (const char* env = std::getenv("FMS_JOBS")) sc_jobs = static_cast<unsigned>(std::atoi(env));
    }

    if (simulate->parsed()) return cmd_simulate(sim_config, sim_out);
    if (spectrum->parsed())
        return cmd_spectrum(sp_input, sp_out, sp_window, sp_psd, sp_column, sp_threshold,
                            sp_minsep, sp_nuac, sp_tstart, sp_tend);
    if (scan->parsed())
        return cmd_scan(sc_config, sc_out, sc_param, sc_start, sc_stop, sc_count, sc_values,
                        sc_jobs, sc_tstart, sc_tend, sc_keep);
    if (sens->parsed())
        return cmd_sensitivity(se_noise, se_record, se_exclude, se_kappa, se_grid, se_tm, se_paper,
                               se_out);
    return exit_usage;
}
