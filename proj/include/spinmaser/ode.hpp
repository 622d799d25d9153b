#pragma once

// Explicit Runge-Kutta steppers: embedded Dormand-Prince 5(4) with adaptive
// step control, and fixed-step classical RK4. Both expose the last accepted
// step so callers can resample onto an arbitrary uniform grid with cubic
// Hermite interpolation of the integrator substeps.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spinmaser {

struct IntegratorStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t evals = 0;
};

class StiffnessError : public std::runtime_error {
  public:
    StiffnessError(double t)
        : std::runtime_error("integrator: step size underflow at t = " + std::to_string(t) + " s"),
          time(t) {}
    double time;
};

namespace detail {

template <std::size_t N>
inline std::array<double, N> hermite(const std::array<double, N>& y0,
                                     const std::array<double, N>& f0,
                                     const std::array<double, N>& y1,
                                     const std::array<double, N>& f1,
                                     double h, double theta) {
    // Cubic Hermite basis on [0,1]
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + theta;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    return out;
}

} // namespace detail

/// Dormand-Prince 5(4) with FSAL and local error controlled per unit step:
/// ||y5 - y4|| <= tol * h * (1 + |y|) on each accepted step.
template <std::size_t N, typename F>
class Rk45Stepper {
  public:
    using State = std::array<double, N>;

    Rk45Stepper(F f, double tol) : f_(std::move(f)), tol_(tol) {}

    void init(double t0, const State& y0, double h_guess) {
        t_lo_ = t_hi_ = t0;
        y_lo_ = y_hi_ = y0;
        f_(t0, y0, f_hi_);
        ++stats_.evals;
        f_lo_ = f_hi_;
        h_ = h_guess;
    }

    double t_low() const { return t_lo_; }
    double t_high() const { return t_hi_; }
    const State& y_high() const { return y_hi_; }
    const IntegratorStats& stats() const { return stats_; }

    /// Recomputes the cached slope at the current point. Needed after the
    /// right-hand side changes discontinuously (zero-order-hold inputs).
    void refresh() {
        f_(t_hi_, y_hi_, f_hi_);
        ++stats_.evals;
    }

    /// Value inside the last accepted step, t in [t_low, t_high].
    State sample(double t) const {
        const double h = t_hi_ - t_lo_;
        const double theta = h > 0 ? (t - t_lo_) / h : 0.0;
        return detail::hermite<N>(y_lo_, f_lo_, y_hi_, f_hi_, h, theta);
    }

    /// Advances by one accepted step, at most up to t_max.
    void step(double t_max) {
        const double t = t_hi_;
        State y = y_hi_;
        State k1 = f_hi_; // FSAL

        for (;;) {
            double h = h_;
            if (t + h > t_max) h = t_max - t;
            if (!(h > 0.0)) throw StiffnessError(t);
            if (h < 1e-14 * std::max(std::abs(t), 1.0)) throw StiffnessError(t);

            State k2, k3, k4, k5, k6, k7, yt, y5;

            auto stage = [&](double c, const double* a, int n, State& k) {
                for (std::size_t i = 0; i < N; ++i) {
                    double acc = 0.0;
                    const State* ks[] = {&k1, &k2, &k3, &k4, &k5, &k6};
                    for (int m = 0; m < n; ++m) acc += a[m] * (*ks[m])[i];
                    yt[i] = y[i] + h * acc;
                }
                f_(t + c * h, yt, k);
                ++stats_.evals;
            };

            static constexpr double a2[] = {1.0 / 5};
            static constexpr double a3[] = {3.0 / 40, 9.0 / 40};
            static constexpr double a4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
            static constexpr double a5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                                            -212.0 / 729};
            static constexpr double a6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247,
                                            49.0 / 176, -5103.0 / 18656};
            static constexpr double b5[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                            -2187.0 / 6784, 11.0 / 84};
            // y5 - y4 error weights
            static constexpr double e[] = {71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                                           -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

            stage(1.0 / 5, a2, 1, k2);
            stage(3.0 / 10, a3, 2, k3);
            stage(4.0 / 5, a4, 3, k4);
            stage(8.0 / 9, a5, 4, k5);
            stage(1.0, a6, 5, k6);

            for (std::size_t i = 0; i < N; ++i)
                y5[i] = y[i] + h * (b5[0] * k1[i] + b5[2] * k3[i] + b5[3] * k4[i] +
                                    b5[4] * k5[i] + b5[5] * k6[i]);
            f_(t + h, y5, k7);
            ++stats_.evals;

            double err = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = tol_ * h * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
                const double d = h * (e[0] * k1[i] + e[2] * k3[i] + e[3] * k4[i] +
                                      e[4] * k5[i] + e[5] * k6[i] + e[6] * k7[i]);
                err += (d / sc) * (d / sc);
            }
            err = std::sqrt(err / static_cast<double>(N));

            if (!std::isfinite(err)) {
                h_ = 0.25 * h;
                ++stats_.rejected;
                continue;
            }

            // err scales as h^4 under per-unit-step normalization
            const double factor =
                std::min(5.0, std::max(0.2, 0.9 * std::pow(err > 1e-300 ? err : 1e-300, -0.25)));

            if (err <= 1.0) {
                t_lo_ = t;
                y_lo_ = y;
                f_lo_ = k1;
                t_hi_ = t + h;
                y_hi_ = y5;
                f_hi_ = k7;
                ++stats_.accepted;
                h_ = h * factor;
                return;
            }
            h_ = h * factor;
            ++stats_.rejected;
        }
    }

  private:
    F f_;
    double tol_;
    double h_ = 1e-3;
    double t_lo_ = 0, t_hi_ = 0;
    State y_lo_{}, y_hi_{}, f_lo_{}, f_hi_{};
    IntegratorStats stats_{};
};

/// Classical fixed-step RK4 with the same stepping interface.
template <std::size_t N, typename F>
class Rk4Stepper {
  public:
    using State = std::array<double, N>;

    Rk4Stepper(F f, double step) : f_(std::move(f)), h_(step) {}

    void init(double t0, const State& y0, double /*h_guess*/) {
        t_lo_ = t_hi_ = t0;
        y_lo_ = y_hi_ = y0;
        f_(t0, y0, f_hi_);
        ++stats_.evals;
        f_lo_ = f_hi_;
    }

    double t_low() const { return t_lo_; }
    double t_high() const { return t_hi_; }
    const State& y_high() const { return y_hi_; }
    const IntegratorStats& stats() const { return stats_; }

    void refresh() {
        f_(t_hi_, y_hi_, f_hi_);
        ++stats_.evals;
    }

    State sample(double t) const {
        const double h = t_hi_ - t_lo_;
        const double theta = h > 0 ? (t - t_lo_) / h : 0.0;
        return detail::hermite<N>(y_lo_, f_lo_, y_hi_, f_hi_, h, theta);
    }

    void step(double t_max) {
        const double t = t_hi_;
        double h = h_;
        if (t + h > t_max) h = t_max - t;
        if (!(h > 0.0) || h < 1e-14 * std::max(std::abs(t), 1.0)) throw StiffnessError(t);

        const State& y = y_hi_;
        State k1 = f_hi_, k2, k3, k4, yt;
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + 0.5 * h * k1[i];
        f_(t + 0.5 * h, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + 0.5 * h * k2[i];
        f_(t + 0.5 * h, yt, k3);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * k3[i];
        f_(t + h, yt, k4);
        stats_.evals += 3;

        State ynew;
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);

        t_lo_ = t;
        y_lo_ = y;
        f_lo_ = k1;
        t_hi_ = t + h;
        y_hi_ = ynew;
        f_(t_hi_, ynew, f_hi_);
        ++stats_.evals;
        ++stats_.accepted;
    }

  private:
    F f_;
    double h_;
    double t_lo_ = 0, t_hi_ = 0;
    State y_lo_{}, y_hi_{}, f_lo_{}, f_hi_{};
    IntegratorStats stats_{};
};

} // namespace spinmaser
