#pragma once

// Physical constants and unit helpers used across the library.
// All quantities are SI unless a name says otherwise.

#include <cmath>
#include <stdexcept>

namespace spinmaser {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Prefix factors for display conversions (storage is always SI).
inline constexpr double nano = 1e-9;
inline constexpr double pico = 1e-12;
inline constexpr double femto = 1e-15;

struct PhysicalConstants {
    // Gyromagnetic ratio of the working nuclear species, Hz/T. Negative for 129Xe.
    double gamma_xe = -1.18e7;
    double planck_h = 6.62607015e-34;   // J*s
    double light_c = 299792458.0;       // m/s
    double ev_to_joule = 1.602176634e-19;
    double g_n = -1.5;                  // nuclear Lande g-factor, dimensionless
    double mu0 = 4.0 * pi * 1e-7;       // vacuum permeability, N/A^2

    constexpr double gamma_abs() const { return gamma_xe < 0 ? -gamma_xe : gamma_xe; }
};

/// Larmor frequency magnitude |gamma|*|B0| in Hz. The sign of b0 encodes the
/// bias direction and is carried separately by the configuration.
inline double larmor_frequency(double b0_tesla, const PhysicalConstants& c = {}) {
    return c.gamma_abs() * std::abs(b0_tesla);
}

/// Dimensionless modulation index |gamma|*B_ac/nu_ac of a longitudinal drive.
/// Throws for nu_ac == 0 (the static-offset case has no index).
inline double modulation_index(double b_ac_tesla, double nu_ac_hz,
                               const PhysicalConstants& c = {}) {
    if (nu_ac_hz == 0.0)
        throw std::domain_error("modulation_index: nu_ac must be nonzero");
    return c.gamma_abs() * std::abs(b_ac_tesla) / nu_ac_hz;
}

} // namespace spinmaser
