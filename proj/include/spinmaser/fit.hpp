#pragma once

// Damped nonlinear least squares (Gauss-Newton with adaptive Levenberg
// regularization) for the small model family used in calibration: exponential
// decay, hyperbolic-secant burst, inverse-frequency response, and a straight
// line. Analytic Jacobians throughout; a generic entry point accepts custom
// residual models with the same signature.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spinmaser/timeseries.hpp"

namespace spinmaser {

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<std::vector<double>> covariance; // sigma^2 * (J^T J)^-1
    double residual_rms = 0.0;
    bool converged = false;
    bool degenerate = false;
    int iterations = 0;
    std::vector<double> objective_trace; // accepted objective values, non-increasing

    double param(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return params[i];
        throw std::out_of_range("FitResult: no parameter '" + name + "'");
    }

    double std_error(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return std::sqrt(std::max(0.0, covariance[i][i]));
        throw std::out_of_range("FitResult: no parameter '" + name + "'");
    }
};

inline nlohmann::json fit_result_json(const FitResult& r) {
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json errors = nlohmann::json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        params[r.names[i]] = r.params[i];
        errors[r.names[i]] = std::sqrt(std::max(0.0, r.covariance[i][i]));
    }
    return {{"params", params},
            {"std_errors", errors},
            {"residual_rms", r.residual_rms},
            {"converged", r.converged},
            {"degenerate", r.degenerate},
            {"iterations", r.iterations}};
}

namespace detail {

// Gaussian elimination with partial pivoting; a is overwritten. Small systems only.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) throw std::runtime_error("solve_dense: singular system");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

inline std::vector<std::vector<double>> invert_dense(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(n, 0.0);
        e[c] = 1.0;
        const auto col = solve_dense(a, e);
        for (std::size_t r = 0; r < n; ++r) inv[r][c] = col[r];
    }
    return inv;
}

} // namespace detail

/// Model callback: fills value and (optionally) the parameter gradient at x.
using FitModel = std::function<double(double x, const std::vector<double>& p, double* grad)>;

struct FitOptions {
    int max_iterations = 200;
    double gradient_tol = 1e-10; // on the normalized gradient norm
    double step_tol = 1e-14;
};

/// Generic damped least squares over (x, y) samples.
inline FitResult fit_least_squares(const std::vector<double>& x, const std::vector<double>& y,
                                   std::vector<std::string> names, std::vector<double> p0,
                                   const FitModel& model, const FitOptions& opt = {}) {
    if (x.size() != y.size()) throw std::invalid_argument("fit: x/y size mismatch");
    const std::size_t n = x.size();
    const std::size_t np = p0.size();
    if (n < np) throw std::invalid_argument("fit: fewer points than parameters");

    auto objective = [&](const std::vector<double>& p) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - model(x[i], p, nullptr);
            ss += r * r;
        }
        return ss;
    };

    std::vector<double> p = std::move(p0);
    double ss = objective(p);
    double lambda = 1e-3;

    FitResult out;
    out.names = std::move(names);
    out.objective_trace.push_back(ss);

    std::vector<double> grad(np);
    std::vector<std::vector<double>> jtj(np, std::vector<double>(np));
    int it = 0;
    bool converged = false;

    for (; it < opt.max_iterations; ++it) {
        for (auto& row : jtj) std::fill(row.begin(), row.end(), 0.0);
        std::fill(grad.begin(), grad.end(), 0.0);
        std::vector<double> g(np);
        double gradient_scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = model(x[i], p, g.data());
            const double r = y[i] - f;
            for (std::size_t a = 0; a < np; ++a) {
                grad[a] += r * g[a];
                for (std::size_t b = a; b < np; ++b) jtj[a][b] += g[a] * g[b];
            }
            gradient_scale += f * f;
        }
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

        double gnorm = 0.0;
        for (const double v : grad) gnorm += v * v;
        gnorm = std::sqrt(gnorm);
        const double scale = std::sqrt(gradient_scale) + std::sqrt(ss) + 1e-30;
        if (gnorm / scale < opt.gradient_tol) {
            converged = true;
            break;
        }

        bool accepted = false;
        for (int tries = 0; tries < 40 && !accepted; ++tries) {
            auto damped = jtj;
            for (std::size_t a = 0; a < np; ++a)
                damped[a][a] += lambda * (jtj[a][a] > 0 ? jtj[a][a] : 1.0);
            std::vector<double> step;
            try {
                step = detail::solve_dense(damped, grad);
            } catch (const std::runtime_error&) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> pt(np);
            double step2 = 0.0;
            for (std::size_t a = 0; a < np; ++a) {
                pt[a] = p[a] + step[a];
                step2 += step[a] * step[a];
            }
            const double sst = objective(pt);
            if (std::isfinite(sst) && sst <= ss) {
                const bool tiny = std::sqrt(step2) < opt.step_tol * (1.0 + std::sqrt(step2 + ss));
                p = std::move(pt);
                ss = sst;
                out.objective_trace.push_back(ss);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (tiny) converged = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted || converged) break;
    }

    out.params = p;
    out.iterations = it;
    out.converged = converged;
    out.residual_rms = std::sqrt(ss / static_cast<double>(n));

    // covariance = sigma^2 (J^T J)^-1 at the solution
    {
        for (auto& row : jtj) std::fill(row.begin(), row.end(), 0.0);
        std::vector<double> g(np);
        for (std::size_t i = 0; i < n; ++i) {
            model(x[i], p, g.data());
            for (std::size_t a = 0; a < np; ++a)
                for (std::size_t b = a; b < np; ++b) jtj[a][b] += g[a] * g[b];
        }
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];
        const double dof = static_cast<double>(n > np ? n - np : 1);
        const double sigma2 = ss / dof;
        try {
            out.covariance = detail::invert_dense(jtj);
            for (auto& row : out.covariance)
                for (auto& v : row) v *= sigma2;
        } catch (const std::runtime_error&) {
            out.covariance.assign(np, std::vector<double>(np, std::numeric_limits<double>::quiet_NaN()));
        }
    }
    return out;
}

/// y = offset + A exp(-rate * t). Initial rate from a log-linear regression of
/// the tail-corrected values; a constant series is flagged degenerate.
inline FitResult fit_exp_decay(const TimeSeries& ts, const FitOptions& opt = {}) {
    const std::size_t n = ts.size();
    if (n < 10) throw std::invalid_argument("fit_exp_decay: need at least 10 points");

    double vmin = ts.values[0], vmax = ts.values[0];
    for (const double v : ts.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (vmax - vmin < 1e-12 * (std::abs(vmax) + 1.0)) {
        FitResult r;
        r.names = {"A", "rate", "offset"};
        r.params = {0.0, 0.0, vmax};
        r.covariance.assign(3, std::vector<double>(3, 0.0));
        r.converged = true;
        r.degenerate = true;
        r.residual_rms = 0.0;
        r.objective_trace = {0.0};
        return r;
    }

    // tail mean approximates the offset
    double offset0 = 0.0;
    const std::size_t tail = std::max<std::size_t>(n / 10, 2);
    for (std::size_t i = n - tail; i < n; ++i) offset0 += ts.values[i];
    offset0 /= static_cast<double>(tail);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ts.values[i] - offset0;
        if (d <= 0.0) continue;
        const double t = ts.time_at(i);
        const double l = std::log(d);
        sx += t;
        sy += l;
        sxx += t * t;
        sxy += t * l;
        ++m;
    }
    double rate0 = 1.0, loga0 = 0.0;
    if (m >= 2) {
        const double denom = static_cast<double>(m) * sxx - sx * sx;
        if (std::abs(denom) > 0) {
            rate0 = -(static_cast<double>(m) * sxy - sx * sy) / denom;
            loga0 = (sy - (-rate0) * sx) / static_cast<double>(m);
        }
    }
    if (!(rate0 > 0.0) || !std::isfinite(rate0)) rate0 = 1.0 / (ts.duration() + 1e-30);
    const double a0 = std::isfinite(loga0) ? std::exp(loga0) : vmax - offset0;

    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = ts.time_at(i);
        y[i] = ts.values[i];
    }
    auto model = [](double x, const std::vector<double>& p, double* grad) {
        const double e = std::exp(-p[1] * x);
        if (grad) {
            grad[0] = e;
            grad[1] = -p[0] * x * e;
            grad[2] = 1.0;
        }
        return p[2] + p[0] * e;
    };
    return fit_least_squares(t, y, {"A", "rate", "offset"}, {a0, rate0, offset0}, model, opt);
}

/// y = amplitude * sech(width_rate * (t - t0)). Requires an interior maximum.
inline FitResult fit_sech(const TimeSeries& ts, const FitOptions& opt = {}) {
    const std::size_t n = ts.size();
    if (n < 5) throw std::invalid_argument("fit_sech: need at least 5 points");
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (ts.values[i] > ts.values[imax]) imax = i;
    if (imax == 0 || imax == n - 1)
        throw std::invalid_argument("fit_sech: envelope has no interior maximum");

    const double amp0 = ts.values[imax];
    const double t00 = ts.time_at(imax);
    // width from the half-maximum crossing: sech(1.3170) = 0.5
    double half_width = ts.duration() / 4.0;
    for (std::size_t i = imax; i < n; ++i) {
        if (ts.values[i] <= 0.5 * amp0) {
            half_width = ts.time_at(i) - t00;
            break;
        }
    }
    const double w0 = 1.3169578969248166 / std::max(half_width, ts.dt);

    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = ts.time_at(i);
        y[i] = ts.values[i];
    }
    auto model = [](double x, const std::vector<double>& p, double* grad) {
        const double u = p[1] * (x - p[2]);
        const double s = 1.0 / std::cosh(u);
        const double th = std::tanh(u);
        if (grad) {
            grad[0] = s;
            grad[1] = -p[0] * s * th * (x - p[2]);
            grad[2] = p[0] * s * th * p[1];
        }
        return p[0] * s;
    };
    return fit_least_squares(t, y, {"amplitude", "width_rate", "t0"}, {amp0, w0, t00}, model, opt);
}

/// xi = a / nu over (nu, xi) points; closed-form linear least squares.
inline FitResult fit_inverse_freq(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 1) throw std::invalid_argument("fit_inverse_freq: need >= 1 point");
    double num = 0.0, den = 0.0;
    for (const auto& [nu, xi] : points) {
        if (!(nu > 0.0)) throw std::invalid_argument("fit_inverse_freq: frequencies must be > 0");
        num += xi / nu;
        den += 1.0 / (nu * nu);
    }
    const double a = num / den;

    FitResult r;
    r.names = {"a"};
    r.params = {a};
    double ss = 0.0;
    for (const auto& [nu, xi] : points) {
        const double d = xi - a / nu;
        ss += d * d;
    }
    const double dof = points.size() > 1 ? static_cast<double>(points.size() - 1) : 1.0;
    r.covariance = {{ss / dof / den}};
    r.residual_rms = std::sqrt(ss / static_cast<double>(points.size()));
    r.converged = true;
    r.iterations = 0;
    r.objective_trace = {ss};
    return r;
}

/// y = a*x + b, ordinary least squares in closed form.
inline FitResult fit_linear(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("fit_linear: need >= 2 points");
    const auto n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw std::invalid_argument("fit_linear: degenerate abscissae");
    const double a = (n * sxy - sx * sy) / denom;
    const double b = (sy - a * sx) / n;

    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double d = y - (a * x + b);
        ss += d * d;
    }
    const double dof = points.size() > 2 ? n - 2.0 : 1.0;
    const double sigma2 = ss / dof;

    FitResult r;
    r.names = {"a", "b"};
    r.params = {a, b};
    r.covariance = {{sigma2 * n / denom, -sigma2 * sx / denom},
                    {-sigma2 * sx / denom, sigma2 * sxx / denom}};
    r.residual_rms = std::sqrt(ss / n);
    r.converged = true;
    r.iterations = 0;
    r.objective_trace = {ss};
    return r;
}

/// Coefficient of determination of predictions yhat against observations y.
inline double r_squared(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.size() != yhat.size() || y.empty()) throw std::invalid_argument("r_squared: size mismatch");
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) return 1.0;
    return 1.0 - ss_res / ss_tot;
}

} // namespace spinmaser
