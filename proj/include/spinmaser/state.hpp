#pragma once

#include <cmath>

namespace spinmaser {

// Numerical slack allowed on |P| <= 1 after integration.
inline constexpr double polarization_norm_slack = 1e-6;

/// Dimensionless spin polarization vector.
struct PolarizationState {
    double px = 0.0;
    double py = 0.0;
    double pz = 0.0;

    double norm2() const { return px * px + py * py + pz * pz; }
    double norm() const { return std::sqrt(norm2()); }
    double transverse() const { return std::hypot(px, py); }

    bool physical() const { return norm2() <= 1.0 + polarization_norm_slack; }
};

/// Rotate a polarization vector by theta about the x axis.
/// Rotation sense: +theta takes +z toward -y (right-handed about +x applied
/// to the axes convention used throughout: (0,0,1) -> (0,-sin,cos)).
inline PolarizationState apply_tip(const PolarizationState& s, double theta) {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    return {s.px, s.py * c - s.pz * sn, s.py * sn + s.pz * c};
}

} // namespace spinmaser
