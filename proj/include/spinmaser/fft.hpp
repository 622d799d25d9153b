#pragma once

// Complex FFT: iterative radix-2 for power-of-two sizes, Bluestein's chirp-z
// algorithm for everything else, so any record length keeps its native
// frequency resolution 1/duration.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spinmaser/constants.hpp"

namespace spinmaser {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? two_pi : -two_pi) / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

// Chirp factor exp(sign * i*pi * n^2 / N) with the quadratic reduced mod 2N
// in integer arithmetic to keep the phase accurate for large n.
inline std::complex<double> chirp(std::uint64_t n, std::uint64_t big_n, double sign) {
    const std::uint64_t q = (n % (2 * big_n)) * (n % (2 * big_n)) % (2 * big_n);
    const double ang = sign * pi * static_cast<double>(q) / static_cast<double>(big_n);
    return {std::cos(ang), std::sin(ang)};
}

} // namespace detail

/// Forward DFT of arbitrary length.
inline std::vector<std::complex<double>> fft(std::vector<std::complex<double>> a) {
    const std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("fft: empty input");
    if (detail::is_pow2(n)) {
        detail::fft_radix2(a, false);
        return a;
    }

    // Bluestein: X_k = c_k * sum_n (x_n c_n) b_{k-n}, b_m = conj(c_m)
    std::size_t l = 1;
    while (l < 2 * n - 1) l <<= 1;
    std::vector<std::complex<double>> u(l, {0.0, 0.0}), v(l, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = detail::chirp(i, n, -1.0);
        u[i] = a[i] * c;
        const auto b = std::conj(c);
        v[i] = b;
        if (i > 0) v[l - i] = b;
    }
    detail::fft_radix2(u, false);
    detail::fft_radix2(v, false);
    for (std::size_t i = 0; i < l; ++i) u[i] *= v[i];
    detail::fft_radix2(u, true);

    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = u[k] * detail::chirp(k, n, -1.0);
    return out;
}

/// Forward DFT of a real sequence; returns the first N/2+1 bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    std::vector<std::complex<double>> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
    auto full = fft(std::move(a));
    full.resize(x.size() / 2 + 1);
    return full;
}

} // namespace spinmaser
