#pragma once

#include <stdexcept>

namespace atomdiode {

// Working units: micrometers and microseconds. All Hamiltonians are stored
// divided by hbar, so matrix elements are angular frequencies in 1/us
// (1 Msi = 1e6 1/s = 1 1/us) and the only mass parameter is m/hbar.
inline constexpr double cm_per_s = 0.01;   // um/us per cm/s
inline constexpr double per_s = 1.0e-6;    // 1/us per 1/s
inline constexpr double msi = 1.0;         // 1/us per Msi

// m/hbar for Neon-20.1797 (CODATA m_u and hbar), in us/um^2.
inline constexpr double neon_m_over_hbar = 317.7;

struct UnitSystem {
    double m_over_hbar = neon_m_over_hbar;  // us/um^2

    UnitSystem() = default;
    explicit UnitSystem(double m_over_hbar_) : m_over_hbar(m_over_hbar_) {
        if (!(m_over_hbar > 0.0))
            throw std::invalid_argument("UnitSystem: m/hbar must be positive");
    }

    // Wavenumber (1/um) of a plane wave with velocity v (um/us).
    double wavenumber(double v) const { return m_over_hbar * v; }

    // Kinetic angular frequency E/hbar (1/us) at velocity v.
    double kinetic_frequency(double v) const { return 0.5 * m_over_hbar * v * v; }
};

}  // namespace atomdiode
