#pragma once

// Bessel functions of the first kind by Miller's downward recurrence with
// normalization against J0(x) + 2*sum J_2k(x) = 1. Accurate to ~1e-13 for the
// orders (<= ~300) and arguments (<= ~150) this project needs; the FFT-based
// frequency-modulation oracle validates it end to end.

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace spinmaser {

/// J_0(x) .. J_nmax(x) for x >= 0.
inline std::vector<double> bessel_jn_array(int nmax, double x) {
    if (nmax < 0) throw std::domain_error("bessel_jn_array: nmax must be >= 0");
    if (x < 0.0) throw std::domain_error("bessel_jn_array: x must be >= 0 here");
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    if (x < 1e-6) {
        // two-term power series; the omitted terms are below 1e-25 relative
        const double h = 0.5 * x;
        double term = 1.0;
        for (int k = 0; k <= nmax; ++k) {
            out[static_cast<std::size_t>(k)] = term * (1.0 - h * h / (k + 1.0));
            term *= h / (k + 1.0);
            if (term == 0.0) break;
        }
        return out;
    }

    // Start well above both the requested order and the turning point so the
    // minimal solution dominates when the recurrence reaches order nmax.
    const double top = std::max(static_cast<double>(nmax), x);
    const int start = static_cast<int>(top) + 90 + static_cast<int>(10.0 * std::cbrt(top));
    const int m0 = (start % 2 == 0) ? start : start + 1;

    double jp = 0.0;       // J_{k+1}
    double jc = 1e-300;    // J_k (arbitrary scale)
    double norm = 0.0;     // accumulates J0 + 2*sum J_{2k}
    const double big = 1e250;

    for (int k = m0; k >= 0; --k) {
        const double jm = (2.0 * (k + 1) / x) * jc - jp; // J_k from J_{k+1}, J_{k+2}
        jp = jc;
        jc = jm;
        if (k <= nmax) out[static_cast<std::size_t>(k)] = jc;
        if (k % 2 == 0) norm += (k == 0 ? 1.0 : 2.0) * jc;

        if (std::abs(jc) > big) {
            jp /= big;
            jc /= big;
            norm /= big;
            for (auto& v : out) v /= big;
        }
    }

    for (auto& v : out) v /= norm;
    return out;
}

/// J_n(x) for any integer order and real argument, via the reflection
/// identities J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
inline double bessel_j(int n, double x) {
    double sign = 1.0;
    if (n < 0) {
        n = -n;
        if (n % 2 != 0) sign = -sign;
    }
    if (x < 0.0) {
        x = -x;
        if (n % 2 != 0) sign = -sign;
    }
    return sign * bessel_jn_array(n, x)[static_cast<std::size_t>(n)];
}

} // namespace spinmaser
