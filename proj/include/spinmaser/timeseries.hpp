#pragma once

// Uniformly sampled records and their CSV form. Floating-point values are
// written with shortest round-trip formatting so re-reading a file reproduces
// the exact doubles.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinmaser {

struct TimeSeries {
    double t0 = 0.0;  // time of the first sample, s
    double dt = 0.0;  // sample interval, s
    std::vector<double> values;
    std::string unit;

    std::size_t size() const { return values.size(); }
    double time_at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double duration() const { return dt * static_cast<double>(values.size()); }
    double sample_rate() const { return 1.0 / dt; }
};

inline std::string format_double(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{})
        throw std::runtime_error("csv: cannot parse number '" + s + "'");
    return v;
}

inline void write_timeseries_csv(std::ostream& out, const TimeSeries& ts,
                                 const std::string& value_header = "value") {
    out << "t," << value_header << "\n";
    for (std::size_t i = 0; i < ts.size(); ++i)
        out << format_double(ts.time_at(i)) << ',' << format_double(ts.values[i]) << "\n";
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// Reads a time series back from CSV. Accepts either a two-column `t,value`
/// file or a wider table; `column` selects the value column by header name
/// (empty = second column). The time grid must be uniform.
inline TimeSeries read_timeseries_csv(std::istream& in, const std::string& column = "") {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw std::runtime_error("csv: expected header starting with 't'");
    std::size_t col = 1;
    if (!column.empty()) {
        bool found = false;
        for (std::size_t i = 1; i < header.size(); ++i)
            if (header[i] == column) { col = i; found = true; break; }
        if (!found) throw std::runtime_error("csv: no column named '" + column + "'");
    }

    std::vector<double> t, v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() <= col) throw std::runtime_error("csv: short row");
        t.push_back(parse_double(f[0]));
        v.push_back(parse_double(f[col]));
    }
    if (t.size() < 2) throw std::runtime_error("csv: need at least two samples");

    TimeSeries ts;
    ts.t0 = t.front();
    ts.dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    const double tol = 1e-6 * ts.dt;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - (ts.t0 + ts.dt * static_cast<double>(i))) > tol + 1e-12)
            throw std::runtime_error("csv: time grid is not uniform");
    ts.values = std::move(v);
    return ts;
}

inline TimeSeries read_timeseries_csv_file(const std::string& path, const std::string& column = "") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    return read_timeseries_csv(in, column);
}

} // namespace spinmaser
